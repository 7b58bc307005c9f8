"""Receiver chain: zero padding, I/Q demodulation to semantic features,
decoding to a coarse cloud, and offset-based upsampling back to full
resolution.

The receiver never sees the transmitter's keep-mask; the symbol count alone
says how many zeros to pad (the mask is a prefix, so tail padding restores
exact positions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoder import PointTransformerBlock, _attention_neighbors
from .modulation import SymbolStream
from .nn import MLP, Linear, Module
from .rng import RandomSource
from .tensor import Tensor


def zero_pad(received: SymbolStream, n_mod: int) -> SymbolStream:
    """Restore the symbol count to n_mod by appending complex zeros."""
    n = received.count
    if n > n_mod:
        raise ValueError(f"received {n} symbols, more than n_mod={n_mod}")
    if n == n_mod:
        return received
    pad = Tensor(np.zeros((n_mod - n, 2)))
    return SymbolStream(symbols=T.concat([received.symbols, pad], axis=0),
                        scale=received.scale, mask=received.mask)


class Demodulator(Module):
    """Learned expansion of the padded symbol stream into features.

    The in-phase and quadrature columns each pass their own non-overlapping
    expansion map (a transposed convolution whose kernel equals its stride
    degenerates to one linear map per branch), and the branch outputs are
    summed into a (n_demod, n_fine) feature matrix, n_fine = N/16.
    """

    def __init__(self, n_mod: int, n_demod: int, n_fine: int,
                 source: RandomSource):
        self.expand_i = Linear(n_mod, n_demod * n_fine, source)
        self.expand_q = Linear(n_mod, n_demod * n_fine, source)
        self.n_mod = n_mod
        self.n_demod = n_demod
        self.n_fine = n_fine

    def __call__(self, padded: SymbolStream) -> Tensor:
        if padded.count != self.n_mod:
            raise ValueError(
                f"demodulator expects {self.n_mod} symbols, got {padded.count}")
        sym = padded.symbols
        i_vec = sym[:, 0].reshape(1, self.n_mod)
        q_vec = sym[:, 1].reshape(1, self.n_mod)
        merged = self.expand_i(i_vec) + self.expand_q(q_vec)
        return merged.reshape(self.n_demod, self.n_fine)


@dataclass
class DecodedTokens:
    """Coarse token coordinates (n_fine, 3) with refined features
    (n_fine, n_demod)."""

    coords: Tensor
    features: Tensor


class CloudDecoder(Module):
    """Features -> coarse coordinates, refined by vector attention over
    those coordinates, then re-estimated."""

    def __init__(self, n_demod: int, n_fine: int, attn_k: int,
                 source: RandomSource):
        self.coarse_head = Linear(n_demod, 3, source)
        self.refine = PointTransformerBlock(n_demod, source)
        self.final_head = Linear(n_demod, 3, source)
        self.attn_k = attn_k

    def __call__(self, features: Tensor) -> DecodedTokens:
        tokens = features.T                       # rows become tokens (n_fine, n_demod)
        coarse = self.coarse_head(tokens)         # (n_fine, 3)
        idx = _attention_neighbors(coarse.data, self.attn_k)
        refined = self.refine(tokens, coarse, idx)
        coords = self.final_head(refined)
        return DecodedTokens(coords=coords, features=refined)


class UpsampleStage(Module):
    """Quadruple the point count by emitting K=4 offset copies per point.

    Offsets come from tanh-ended MLPs scaled by `offset_range`, so each
    component stays within +/- offset_range; per-copy feature maps refresh
    the features for the next stage.
    """

    def __init__(self, feature_dim: int, offset_range: float,
                 source: RandomSource, copies: int = 4,
                 emit_features: bool = True):
        self.offset_heads = [MLP(feature_dim, [feature_dim, 3], source, final="tanh")
                             for _ in range(copies)]
        # the last stage's per-copy feature maps would feed nothing
        self.feature_heads = ([MLP(feature_dim, [feature_dim, feature_dim], source)
                               for _ in range(copies)] if emit_features else [])
        self.offset_range = offset_range

    def __call__(self, coords: Tensor, features: Tensor) -> tuple[Tensor, Tensor | None]:
        out_coords = [coords + delta(features) * self.offset_range
                      for delta in self.offset_heads]
        out_feats = [phi(features) for phi in self.feature_heads]
        return (T.concat(out_coords, axis=0),
                T.concat(out_feats, axis=0) if out_feats else None)


class Detokenizer(Module):
    """Two x4 upsampling stages: n_fine tokens become 16 * n_fine points."""

    def __init__(self, feature_dim: int, offset_range: float,
                 source: RandomSource):
        self.stage1 = UpsampleStage(feature_dim, offset_range, source)
        self.stage2 = UpsampleStage(feature_dim, offset_range, source,
                                    emit_features=False)

    def __call__(self, tokens: DecodedTokens) -> Tensor:
        coords, feats = self.stage1(tokens.coords, tokens.features)
        coords, _ = self.stage2(coords, feats)
        return coords
