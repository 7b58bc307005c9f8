"""Differentiable mapping of logits onto standard square-QAM grids.

Forward passes land exactly on the constellation (bit-exact, not within a
tolerance); gradients flow through a chosen relaxation instead:

  gumbel-soft   probability sampling (Gumbel noise + temperature softmax),
                inner product with the level codebook, then distance-softmax
                soft quantization as the backward surrogate
  ste           gradient of the pre-quantization position passed unchanged
  uniform-noise quantization treated as identity on position + uniform noise
                spanning one quantization cell
  hard          no backward path at all (baseline for gradient-flow checks)

The two halves of each logit row drive the in-phase and quadrature axes
independently; the pair forms one complex symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .nn import MLP, Module
from .rng import RandomSource, gumbel_noise
from .tensor import Tensor

ESTIMATORS = ("gumbel-soft", "ste", "uniform-noise", "hard")


@dataclass(frozen=True)
class Codebook:
    """Per-axis amplitude levels of an M-point square QAM grid.

    Levels are strictly increasing, symmetric about 0, and scaled so the
    mean energy over the full 2-D constellation is 1.
    """

    levels: np.ndarray
    order: int

    @property
    def spacing(self) -> float:
        return float(self.levels[1] - self.levels[0])

    def grid(self) -> np.ndarray:
        """All M complex constellation points."""
        i, q = np.meshgrid(self.levels, self.levels, indexing="ij")
        return (i + 1j * q).reshape(-1)


def make_codebook(mod_order: int) -> Codebook:
    side = int(round(np.sqrt(mod_order)))
    if side * side != mod_order or mod_order < 4:
        raise ValueError(f"modulation order must be square (4/16/64/...), got {mod_order}")
    raw = np.arange(-(side - 1), side, 2, dtype=np.float64)  # -(L-1), ..., +(L-1)
    scale = 1.0 / np.sqrt(2.0 * np.mean(raw ** 2))
    return Codebook(levels=raw * scale, order=mod_order)


def straight_through(hard: np.ndarray, soft: Tensor) -> Tensor:
    """Forward takes `hard` verbatim; backward routes the gradient into
    `soft` unchanged (the detach-composition trick)."""
    soft = Tensor._lift(soft)

    def bw(g):
        soft._accum(g)

    return soft._make(np.array(hard, dtype=np.float64, copy=True), (soft,), bw)


def gumbel_soft_probs(logits_half: Tensor, temperature: float,
                      noise: np.ndarray | None) -> Tensor:
    """Soft position probabilities: softmax((logits + gumbel) / T) along the
    last axis.  `noise=None` runs noiseless (deterministic eval)."""
    logits_half = Tensor._lift(logits_half)
    if noise is not None:
        logits_half = logits_half + Tensor(noise)
    return logits_half.softmax(axis=-1, temperature=temperature)


def initial_position(probs: Tensor, codebook: Codebook) -> Tensor:
    """Inner product of position probabilities with the level codebook."""
    return (probs * Tensor(codebook.levels)).sum(axis=-1)


def hard_quantize(position: np.ndarray, codebook: Codebook) -> np.ndarray:
    """Nearest codebook level; equidistant ties resolve to the lower level."""
    position = np.asarray(position, dtype=np.float64)
    d = np.abs(codebook.levels - position[..., None])
    return codebook.levels[np.argmin(d, axis=-1)]


def soft_quantize(position: Tensor, codebook: Codebook,
                  temperature: float) -> Tensor:
    """Distance-softmax weighted average of the levels: the differentiable
    surrogate for nearest-level quantization."""
    position = Tensor._lift(position)
    d = (position.reshape(*position.shape, 1) - Tensor(codebook.levels)).abs()
    w = (-d).softmax(axis=-1, temperature=temperature)
    return (w * Tensor(codebook.levels)).sum(axis=-1)


@dataclass
class SymbolStream:
    """Complex constellation points as an (n, 2) in-phase/quadrature tensor,
    with power bookkeeping."""

    symbols: Tensor
    scale: float = 1.0              # power-normalizer gain already applied
    mask: np.ndarray | None = None  # transmitter keep-mask over auxiliary rows

    @property
    def count(self) -> int:
        return self.symbols.shape[0]

    @property
    def complex_values(self) -> np.ndarray:
        d = self.symbols.data
        return d[:, 0] + 1j * d[:, 1]


def _axis_output(logits_half: Tensor, codebook: Codebook, temperature: float,
                 estimator: str, noise: np.ndarray | None,
                 cell_noise: np.ndarray | None, soft_forward: bool) -> Tensor:
    probs = gumbel_soft_probs(logits_half, temperature, noise)
    position = initial_position(probs, codebook)     # (n,)
    hard = hard_quantize(position.data, codebook)
    if estimator == "gumbel-soft":
        surrogate = soft_quantize(position, codebook, temperature)
    elif estimator == "ste":
        surrogate = position
    elif estimator == "uniform-noise":
        jitter = np.zeros(position.shape) if cell_noise is None else cell_noise
        surrogate = position + Tensor(jitter)
    elif estimator == "hard":
        return Tensor(hard)
    else:
        raise ValueError(f"unknown estimator {estimator!r}; pick from {ESTIMATORS}")
    if soft_forward:
        return surrogate
    return straight_through(hard, surrogate)


def modulate(logits: Tensor, codebook: Codebook, temperature: float,
             noise_source: RandomSource | None = None,
             estimator: str = "gumbel-soft",
             soft_forward: bool = False) -> SymbolStream:
    """Map logit rows (n, 2*sqrt(M)) to a stream of n constellation points.

    Forward output sits exactly on the grid; the backward path follows
    `estimator`.  `noise_source=None` disables Gumbel noise (eval mode).
    `soft_forward=True` swaps the forward to the relaxed surrogate itself,
    which makes the whole map smooth for finite-difference checking.
    """
    logits = Tensor._lift(logits)
    side = len(codebook.levels)
    if logits.ndim != 2 or logits.shape[1] != 2 * side:
        raise ValueError(
            f"logits must be (n, {2 * side}) for order {codebook.order}, "
            f"got {logits.shape}")
    n = logits.shape[0]
    noise_i = gumbel_noise(noise_source, (n, side)) if noise_source is not None else None
    noise_q = gumbel_noise(noise_source, (n, side)) if noise_source is not None else None
    cell_i = cell_q = None
    if estimator == "uniform-noise" and noise_source is not None:
        half = codebook.spacing / 2.0
        cell_i = noise_source.uniform(n, -half, half)
        cell_q = noise_source.uniform(n, -half, half)
    out_i = _axis_output(logits[:, :side], codebook, temperature, estimator,
                         noise_i, cell_i, soft_forward)
    out_q = _axis_output(logits[:, side:], codebook, temperature, estimator,
                         noise_q, cell_q, soft_forward)
    return SymbolStream(symbols=T.stack([out_i, out_q], axis=1))


def normalize_power(streams, target: float = 1.0):
    """Scale symbols so the empirical mean power equals `target`.

    Accepts one stream or a list; a list gets a single shared scale (one
    normalizer gain per training iteration).  Returns the same structure.
    """
    single = isinstance(streams, SymbolStream)
    group = [streams] if single else list(streams)
    if not group or any(s.count == 0 for s in group):
        raise ValueError("cannot normalize an empty stream")
    total = None
    n = 0
    for s in group:
        e = (s.symbols ** 2).sum()
        total = e if total is None else total + e
        n += s.count
    power = total / float(n)
    if power.data == 0.0:
        raise ValueError("cannot normalize an all-zero stream (undefined scale)")
    scale = (Tensor(float(target)) / power).sqrt()
    out = [SymbolStream(symbols=s.symbols * scale, scale=float(scale.data),
                        mask=s.mask) for s in group]
    return out[0] if single else out


@dataclass
class RateDecision:
    """Cutoff-level choice with its thermal keep-mask over auxiliary rows."""

    level: int                     # 1-based rate level
    onehot: Tensor                 # (n_levels,), straight-through
    mask: np.ndarray               # (n_auxi,) prefix of ones
    mask_tensor: Tensor            # same mask with a relaxed backward path
    keep_count: int
    n_send: Tensor                 # scalar node, expected-count backward
    n_send_value: int = field(init=False)

    def __post_init__(self):
        self.n_send_value = int(round(float(self.n_send.data)))


class RateAllocator(Module):
    """Choose how many auxiliary symbols to send from the logits alone.

    Pool the logit matrix along the position-probability axis, reduce with a
    progressive MLP (each block quarters the width) down to one logit per
    rate level, pick the cutoff by Gumbel-Max (softmax relaxation backward),
    and expand the one-hot into a prefix-of-ones thermal mask.  Main-branch
    symbols are always kept.
    """

    def __init__(self, n_mod: int, n_main: int, n_auxi: int,
                 temperature: float, source: RandomSource,
                 n_levels: int = 5):
        widths = []
        w = n_mod
        while int(np.ceil(w / 4)) > n_levels:
            w = int(np.ceil(w / 4))
            widths.append(w)
        widths.append(n_levels)
        self.reduce = MLP(n_mod, widths, source)
        self.n_mod = n_mod
        self.n_main = n_main
        self.n_auxi = n_auxi
        self.n_levels = n_levels
        self.temperature = temperature
        # keep ceil(level/5 * n_auxi) symbols at each level; prefix patterns
        self.keep_counts = np.array(
            [int(np.ceil(lv / n_levels * n_auxi)) for lv in range(1, n_levels + 1)])
        self.patterns = np.zeros((n_levels, n_auxi))
        for lv, keep in enumerate(self.keep_counts):
            self.patterns[lv, :keep] = 1.0

    def __call__(self, logits: Tensor,
                 noise_source: RandomSource | None = None) -> RateDecision:
        pooled = logits.max(axis=1)                        # (n_mod,)
        level_logits = self.reduce(pooled.reshape(1, self.n_mod)).reshape(self.n_levels)
        scored = level_logits + Tensor(gumbel_noise(noise_source, (self.n_levels,)))
        soft = scored.softmax(axis=0, temperature=self.temperature)
        idx = int(np.argmax(scored.data))
        hard = np.zeros(self.n_levels)
        hard[idx] = 1.0
        onehot = straight_through(hard, soft)
        mask_tensor = (onehot.reshape(1, self.n_levels) @ Tensor(self.patterns)
                       ).reshape(self.n_auxi)
        n_send = (onehot * Tensor(self.keep_counts.astype(np.float64))).sum() \
            + float(self.n_main)
        return RateDecision(level=idx + 1, onehot=onehot,
                            mask=self.patterns[idx].copy(),
                            mask_tensor=mask_tensor,
                            keep_count=int(self.keep_counts[idx]),
                            n_send=n_send)


def apply_rate_mask(stream: SymbolStream, decision: RateDecision,
                    n_main: int) -> SymbolStream:
    """Drop masked auxiliary tail symbols before transmission.

    Kept auxiliary rows are multiplied by their (forward-1) mask entries so
    the cutoff logits receive a gradient from the reconstruction as well as
    from the rate term.
    """
    symbols = stream.symbols
    main = symbols[:n_main]
    if decision.keep_count == 0:
        return SymbolStream(symbols=main, mask=decision.mask.copy())
    aux = symbols[n_main:]
    masked = aux * decision.mask_tensor.reshape(len(decision.mask), 1)
    kept = masked[:decision.keep_count]
    return SymbolStream(symbols=T.concat([main, kept], axis=0),
                        mask=decision.mask.copy())
