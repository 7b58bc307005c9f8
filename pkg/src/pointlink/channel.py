"""AWGN and flat Rayleigh fading simulation with SNR accounting, zero-forcing
equalization, and imperfect-CSI perturbation.

Symbols travel as (n, 2) in-phase/quadrature tensors, so every channel op is
a differentiable pass-through whose gradient is the complex chain factor.
Block fading: one gain per transmission.  Noise splits evenly between the I
and Q components (variance P_noise / 2 each).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modulation import SymbolStream
from .rng import RandomSource
from .tensor import Tensor


@dataclass
class ChannelRealization:
    kind: str                      # "awgn" | "rayleigh"
    gain: complex                  # h (1+0j for AWGN)
    noise_power: float
    gain_estimate: complex         # receiver-side CSI

    @property
    def received_power_factor(self) -> float:
        return abs(self.gain) ** 2


def _complex_scale(symbols: Tensor, factor: complex) -> Tensor:
    """Multiply (n, 2) I/Q rows by a fixed complex scalar."""
    a, b = factor.real, factor.imag
    rot = Tensor(np.array([[a, b], [-b, a]]))  # (I + jQ)(a + jb) in I/Q coords
    return symbols @ rot


def _draw_noise(count: int, noise_power: float, source: RandomSource) -> np.ndarray:
    return source.normal((count, 2), scale=np.sqrt(noise_power / 2.0))


def transmit_awgn(stream: SymbolStream, noise_power: float,
                  source: RandomSource) -> tuple[SymbolStream, ChannelRealization]:
    """Received = sent + circular complex Gaussian noise of power
    `noise_power` per symbol."""
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    received = stream.symbols
    if noise_power > 0:
        received = received + Tensor(_draw_noise(stream.count, noise_power, source))
    real = ChannelRealization(kind="awgn", gain=1 + 0j,
                              noise_power=noise_power, gain_estimate=1 + 0j)
    return SymbolStream(symbols=received, scale=stream.scale, mask=stream.mask), real


def transmit_rayleigh(stream: SymbolStream, noise_power: float,
                      source: RandomSource) -> tuple[SymbolStream, ChannelRealization]:
    """Received = h * sent + noise with h ~ CN(0, 1) held for the whole
    block; received signal power is |h|^2 times the sent power."""
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    re, im = source.normal(scale=np.sqrt(0.5)), source.normal(scale=np.sqrt(0.5))
    h = complex(re, im)
    received = _complex_scale(stream.symbols, h)
    if noise_power > 0:
        received = received + Tensor(_draw_noise(stream.count, noise_power, source))
    real = ChannelRealization(kind="rayleigh", gain=h,
                              noise_power=noise_power, gain_estimate=h)
    return SymbolStream(symbols=received, scale=stream.scale, mask=stream.mask), real


def snr_db(signal_power: float, noise_power: float) -> float:
    """10 log10(P_signal / P_noise)."""
    if signal_power <= 0 or noise_power <= 0:
        raise ValueError("snr_db needs strictly positive powers")
    return 10.0 * np.log10(signal_power / noise_power)


def noise_power_for_snr(snr: float, signal_power: float = 1.0) -> float:
    """Noise power that realizes a target SNR (dB) at the given signal
    power."""
    return signal_power * 10.0 ** (-snr / 10.0)


def zf_equalize(received: SymbolStream, csi: complex) -> SymbolStream:
    """Zero-forcing: multiply by conj(csi)/|csi|^2, the algebraic inverse of
    a flat gain."""
    if csi == 0:
        raise ValueError("zero-forcing requires nonzero CSI")
    w = np.conj(csi) / (abs(csi) ** 2)
    return SymbolStream(symbols=_complex_scale(received.symbols, complex(w)),
                        scale=received.scale, mask=received.mask)


def perturb_csi(gain: complex, noise_power: float,
                source: RandomSource) -> complex:
    """Imperfect channel knowledge: estimate = gain + CN(0, noise_power)."""
    if noise_power < 0:
        raise ValueError("CSI noise power must be >= 0")
    if noise_power == 0:
        return gain
    re, im = source.normal(scale=np.sqrt(noise_power / 2.0)), \
        source.normal(scale=np.sqrt(noise_power / 2.0))
    return gain + complex(re, im)
