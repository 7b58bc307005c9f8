"""Two parallel link encoders built from vector-attention transformer blocks.

The main branch adds a second set-abstraction stage plus another transformer
block before its head; the auxiliary branch goes straight to its head.  Both
emit per-symbol logit rows of width 2*sqrt(M): the first sqrt(M) entries are
in-phase position logits, the last sqrt(M) quadrature.  A per-branch channel
adapter can refine the logits from the SNR.  No sampling happens here, so
outputs are deterministic given parameters.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .geometry import knn
from .nn import MLP, Linear, Module
from .rng import RandomSource
from .tensor import Tensor
from .tokenizer import SetAbstraction, SetAbstractionConfig, TokenSet

SQUARE_QAM_ORDERS = (4, 16, 64, 256)


def logit_width(mod_order: int) -> int:
    """Rows of logits carry 2*sqrt(M) entries; M must be square QAM."""
    if mod_order not in SQUARE_QAM_ORDERS:
        raise ValueError(
            f"modulation order must be one of {SQUARE_QAM_ORDERS}, got {mod_order}")
    return 2 * int(round(np.sqrt(mod_order)))


class VectorAttention(Module):
    """Vector attention over local token neighborhoods.

    Per token i, neighbor j: weights = softmax_j(attn_mlp(query_i - key_j +
    pos_ij) / sqrt(C')) applied channelwise to (value_j + pos_ij), summed
    over j.  pos_ij is an MLP of the coordinate difference.  Both internal
    MLPs are two linear layers with one relu.
    """

    def __init__(self, dim: int, source: RandomSource):
        self.dim = dim
        self.query = Linear(dim, dim, source)
        self.key = Linear(dim, dim, source)
        self.value = Linear(dim, dim, source)
        self.attn_mlp = MLP(dim, [dim, dim], source)       # scores from q-k differences
        self.pos_mlp = MLP(3, [dim, dim], source)          # position encoding

    def __call__(self, features: Tensor, coords: Tensor,
                 neighbor_idx: np.ndarray) -> Tensor:
        n, k = neighbor_idx.shape
        q = self.query(features).reshape(n, 1, self.dim)
        key = T.take_rows(self.key(features), neighbor_idx)      # (n, k, C')
        val = T.take_rows(self.value(features), neighbor_idx)    # (n, k, C')
        coords = Tensor._lift(coords)
        rel = coords.reshape(n, 1, 3) - T.take_rows(coords, neighbor_idx)
        pos = self.pos_mlp(rel)                                  # (n, k, C')
        scores = self.attn_mlp(q - key + pos) * (1.0 / np.sqrt(self.dim))
        weights = scores.softmax(axis=1)                         # sum to 1 over neighbors
        return (weights * (val + pos)).sum(axis=1)               # (n, C')


class PointTransformerBlock(Module):
    """linear -> vector attention -> linear, with a residual from the block
    input."""

    def __init__(self, dim: int, source: RandomSource):
        self.pre = Linear(dim, dim, source)
        self.attention = VectorAttention(dim, source)
        self.post = Linear(dim, dim, source)

    def __call__(self, features: Tensor, coords: Tensor,
                 neighbor_idx: np.ndarray) -> Tensor:
        x = self.pre(features)
        x = self.attention(x, coords, neighbor_idx)
        return self.post(x) + features


def _attention_neighbors(coords: np.ndarray, k: int) -> np.ndarray:
    return knn(coords, coords, min(k, len(coords))).indices


class BranchHead(Module):
    """Per-token MLP, then a flatten + linear pair that spreads token
    features across all of the branch's symbol rows."""

    def __init__(self, dim: int, n_tokens: int, n_symbols: int,
                 head_widths: list, mod_order: int, source: RandomSource):
        width = logit_width(mod_order)
        self.per_token = MLP(dim, list(head_widths) + [width], source)
        self.mix = Linear(n_tokens * width, n_symbols * width, source)
        self.n_symbols = n_symbols
        self.width = width

    def __call__(self, tokens: Tensor) -> Tensor:
        per = self.per_token(tokens)                     # (n_tokens, 2 sqrt M)
        flat = per.reshape(1, per.size)                  # row-major (token, channel)
        return self.mix(flat).reshape(self.n_symbols, self.width)


class MainEncoder(Module):
    """Transformer block at N', a second set abstraction to N'', another
    transformer block, then the branch head to (n_main, 2 sqrt M)."""

    def __init__(self, dim: int, n_tokens: int, coarse_cfg: SetAbstractionConfig,
                 n_main: int, mod_order: int, attn_k: int,
                 head_widths: list, source: RandomSource):
        self.block1 = PointTransformerBlock(dim, source)
        self.coarsen = SetAbstraction(coarse_cfg, dim, source)
        self.block2 = PointTransformerBlock(dim, source)
        self.head = BranchHead(dim, coarse_cfg.sample_count, n_main,
                               head_widths, mod_order, source)
        self.attn_k = attn_k

    def __call__(self, tokens: TokenSet) -> Tensor:
        idx = _attention_neighbors(tokens.centroids, self.attn_k)
        x = self.block1(tokens.embeddings, Tensor(tokens.centroids), idx)
        coarse = self.coarsen(tokens.centroids, x)
        idx2 = _attention_neighbors(coarse.centroids, self.attn_k)
        y = self.block2(coarse.embeddings, Tensor(coarse.centroids), idx2)
        return self.head(y)


class AuxiliaryEncoder(Module):
    """Single transformer block at N' followed by the branch head to
    (n_auxi, 2 sqrt M)."""

    def __init__(self, dim: int, n_tokens: int, n_auxi: int, mod_order: int,
                 attn_k: int, head_widths: list, source: RandomSource):
        self.block = PointTransformerBlock(dim, source)
        self.head = BranchHead(dim, n_tokens, n_auxi, head_widths, mod_order,
                               source)
        self.attn_k = attn_k

    def __call__(self, tokens: TokenSet) -> Tensor:
        idx = _attention_neighbors(tokens.centroids, self.attn_k)
        x = self.block(tokens.embeddings, Tensor(tokens.centroids), idx)
        return self.head(x)


class ChannelAdapter(Module):
    """Refine a branch's logits from the channel condition.

    Each row is concatenated with SNR_dB / 10 (scaled to avoid numerical
    issues) and mapped back to width 2*sqrt(M).  The output *replaces* the
    logits rather than perturbing them.
    """

    def __init__(self, mod_order: int, source: RandomSource, hidden: int = 128):
        width = logit_width(mod_order)
        self.refine = MLP(width + 1, [hidden, width], source)

    def __call__(self, logits: Tensor, snr_db: float) -> Tensor:
        n = logits.shape[0]
        cond = Tensor(np.full((n, 1), snr_db / 10.0))
        return self.refine(T.concat([logits, cond], axis=1))
