"""Point tokenization by sample-group-aggregate (set abstraction).

Dimension flow for one stage:

    (N, 3) --fps--> (N', 3) --ball query--> (N', K, C) --group--> (N', K, C+3)
           --local frame--> (N', K, C+3) --shared pointwise map--> (N', K, C')
           --max pool over K--> (N', C')

The pointwise map is a shared per-point affine + relu stack (equivalent to a
1x1 convolution).  Differentiable end to end with respect to features and
pointwise parameters; sampling indices come from coordinates only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .geometry import PointCloud, ball_query, fps
from .nn import MLP, Module
from .rng import RandomSource
from .tensor import Tensor


@dataclass
class SetAbstractionConfig:
    sample_count: int
    radius: float
    k: int
    widths: list  # pointwise layer widths, last entry is the token dim C'

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not self.widths:
            raise ValueError("pointwise widths must be non-empty")


@dataclass
class TokenSet:
    """N' point tokens: centroid coordinates plus C'-wide embeddings."""

    embeddings: Tensor        # (N', C')
    centroids: np.ndarray     # (N', 3)
    indices: np.ndarray       # centroid indices into the parent set

    def __len__(self):
        return len(self.centroids)


class SetAbstraction(Module):
    """One sample-group-aggregate stage with a shared pointwise network."""

    def __init__(self, cfg: SetAbstractionConfig, feature_dim: int,
                 source: RandomSource):
        self.cfg = cfg
        # pointwise input is features concatenated with local-frame coords
        self.pointwise = MLP(feature_dim + 3, list(cfg.widths), source,
                             activation="relu", final="relu")

    def __call__(self, coords: np.ndarray, features: Tensor,
                 start: int | str = 0,
                 source: RandomSource | None = None) -> TokenSet:
        """coords (N, 3) data; features (N, C) may carry gradients."""
        cfg = self.cfg
        centroids = fps(coords, cfg.sample_count, start=start, source=source)
        table = ball_query(coords, centroids, cfg.radius, cfg.k)
        grouped = T.take_rows(features, table.indices)       # (N', K, C)
        local = Tensor(table.relative)                       # (N', K, 3), constant
        stacked = T.concat([grouped, local], axis=2)         # (N', K, C+3)
        lifted = self.pointwise(stacked)                     # (N', K, C')
        pooled = lifted.max(axis=1)                          # (N', C')
        return TokenSet(embeddings=pooled, centroids=centroids.coords,
                        indices=centroids.indices)


def tokenize(cloud: PointCloud, stage: SetAbstraction,
             start: int | str = 0,
             source: RandomSource | None = None) -> TokenSet:
    """Convert a raw cloud into point tokens.

    Stage-1 semantics: the per-point features are simply the coordinates
    (C = 3), so absolute position enters through the feature channel while
    the grouped coordinates are re-expressed relative to each centroid.
    """
    features = Tensor(cloud.points)
    return stage(cloud.points, features, start=start, source=source)
