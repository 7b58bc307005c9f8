"""Point-cloud containers and non-learned geometric kernels.

All kernels are pure functions of their inputs: farthest point sampling,
ball query with fixed arity, exact kNN, PCA normal estimation, and synthetic
shape generation for desk-scale datasets.  Safe to call concurrently on
shared read-only clouds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RandomSource


@dataclass
class PointCloud:
    """N x 3 coordinates (unit-cube normalized), optional unit normals and
    per-point features."""

    points: np.ndarray
    normals: np.ndarray | None = None
    features: np.ndarray | None = None
    degenerate: np.ndarray | None = None  # set by estimate_normals

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {self.points.shape}")
        if len(self.points) < 1:
            raise ValueError("point cloud needs at least one point")
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64)
            if self.normals.shape != self.points.shape:
                raise ValueError("normals must match points shape")
            norms = np.linalg.norm(self.normals, axis=1)
            if not np.allclose(norms, 1.0, atol=1e-9):
                raise ValueError("normals must have unit norm within 1e-9")
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64)
            if len(self.features) != len(self.points):
                raise ValueError("features must have one row per point")

    def __len__(self):
        return len(self.points)


@dataclass
class CentroidSet:
    """Subsampled points: distinct indices into the parent cloud plus their
    coordinates."""

    indices: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if len(np.unique(self.indices)) != len(self.indices):
            raise ValueError("centroid indices must be distinct")

    def __len__(self):
        return len(self.indices)


@dataclass
class NeighborTable:
    """Per-centroid fixed-arity neighbor indices and centroid-relative
    coordinates (both (n_centroids, K, ...))."""

    indices: np.ndarray
    relative: np.ndarray


def fps(cloud: PointCloud | np.ndarray, count: int,
        start: int | str = 0, source: RandomSource | None = None) -> CentroidSet:
    """Greedy max-min farthest point sampling.

    Each new centroid maximizes its distance to the already-selected set,
    where point-to-set distance is the minimum distance over set members.
    `start` is an index, or "random" (needs `source`).  Distance ties break
    to the lower index.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    n = len(pts)
    if not 1 <= count <= n:
        raise ValueError(f"fps count must be in [1, {n}], got {count}")
    if start == "random":
        if source is None:
            raise ValueError("random start requires a RandomSource")
        first = int(source.integers(0, n))
    else:
        first = int(start)
    chosen = np.empty(count, dtype=np.int64)
    chosen[0] = first
    # squared distance to the nearest chosen centroid so far
    d2 = np.sum((pts - pts[first]) ** 2, axis=1)
    for j in range(1, count):
        nxt = int(np.argmax(d2))  # argmax takes the first (lowest) index on ties
        chosen[j] = nxt
        d2 = np.minimum(d2, np.sum((pts - pts[nxt]) ** 2, axis=1))
    return CentroidSet(indices=chosen, coords=pts[chosen])


def ball_query(cloud: PointCloud | np.ndarray, centroids: CentroidSet,
               radius: float, k: int) -> NeighborTable:
    """Fixed-arity radius search.

    Per centroid: gather all in-radius points; with more than K candidates
    keep the K *largest* indices (candidates sorted by index descending);
    with fewer than K, pad by repeating the smallest in-radius index.  A
    centroid drawn from the cloud always finds itself, so an empty candidate
    set is a contract violation.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    r2 = radius * radius
    rows = np.empty((len(centroids), k), dtype=np.int64)
    for row, c in enumerate(centroids.coords):
        d2 = np.sum((pts - c) ** 2, axis=1)
        cand = np.nonzero(d2 <= r2)[0]
        if len(cand) == 0:
            raise ValueError(
                f"ball_query: centroid {row} has no in-radius point "
                f"(radius {radius})")
        if len(cand) >= k:
            rows[row] = cand[::-1][:k]  # descending index, top K
        else:
            rows[row, :len(cand)] = cand[::-1]
            rows[row, len(cand):] = cand[0]  # pad with the smallest index
    relative = pts[rows] - centroids.coords[:, None, :]
    return NeighborTable(indices=rows, relative=relative)


def knn(queries: np.ndarray, reference: np.ndarray, k: int) -> NeighborTable:
    """Exact k nearest neighbors by Euclidean distance, ties to the lower
    index."""
    queries = np.asarray(queries, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if k > len(reference):
        raise ValueError(f"k={k} exceeds reference size {len(reference)}")
    d2 = np.sum((queries[:, None, :] - reference[None, :, :]) ** 2, axis=2)
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k]  # stable: lower index wins ties
    relative = reference[idx] - queries[:, None, :]
    return NeighborTable(indices=idx, relative=relative)


def estimate_normals(cloud: PointCloud, k: int = 16) -> PointCloud:
    """Per-point PCA normals from the k nearest neighbors.

    The normal is the eigenvector of the smallest covariance eigenvalue;
    sign is left arbitrary (point-to-plane scoring squares the cosine).
    Neighborhoods with covariance rank < 2 get (0, 0, 1) and a raised
    `degenerate` flag.
    """
    if k < 3:
        raise ValueError(f"normal estimation needs k >= 3, got {k}")
    k = min(k, len(cloud))
    table = knn(cloud.points, cloud.points, k)
    normals = np.empty_like(cloud.points)
    degenerate = np.zeros(len(cloud), dtype=bool)
    for i, nbr in enumerate(table.indices):
        nbh = cloud.points[nbr]
        cov = np.cov(nbh.T, bias=True)
        evals, evecs = np.linalg.eigh(cov)  # ascending eigenvalues
        if evals[1] <= 1e-12 * max(evals[2], 1.0):
            normals[i] = (0.0, 0.0, 1.0)
            degenerate[i] = True
        else:
            normals[i] = evecs[:, 0]
    out = PointCloud(points=cloud.points.copy(), normals=normals,
                     features=None if cloud.features is None else cloud.features.copy())
    out.degenerate = degenerate
    return out


_CENTER = np.array([0.5, 0.5, 0.5])


def synth_shape(kind: str, n: int, source: RandomSource) -> PointCloud:
    """Sample `n` surface points of a canonical shape inside the unit cube.

    kinds: sphere (radius 0.5 about the cube center), cube-surface, torus
    (R=0.35, r=0.15), plane (z=0.5).  Analytic surface normals are attached.
    Deterministic under the source's seed.
    """
    if n < 8:
        raise ValueError(f"synth_shape needs n >= 8, got {n}")
    if kind == "sphere":
        d = source.normal((n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        pts = _CENTER + 0.5 * d
        normals = d
    elif kind == "plane":
        xy = source.uniform((n, 2))
        pts = np.column_stack([xy[:, 0], xy[:, 1], np.full(n, 0.5)])
        normals = np.tile([0.0, 0.0, 1.0], (n, 1))
    elif kind == "cube-surface":
        face = source.integers(0, 6, n)
        uv = source.uniform((n, 2))
        pts = np.empty((n, 3))
        normals = np.zeros((n, 3))
        axis = face % 3
        side = (face // 3).astype(np.float64)  # 0 or 1
        for i in range(n):
            a = axis[i]
            rest = [j for j in range(3) if j != a]
            pts[i, a] = side[i]
            pts[i, rest[0]] = uv[i, 0]
            pts[i, rest[1]] = uv[i, 1]
            normals[i, a] = 1.0 if side[i] > 0 else -1.0
    elif kind == "torus":
        big, small = 0.35, 0.15
        theta = source.uniform(n, 0.0, 2 * np.pi)
        phi = source.uniform(n, 0.0, 2 * np.pi)
        ring = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(n)])
        pts = _CENTER + ring * (big + small * np.cos(phi))[:, None]
        pts[:, 2] += small * np.sin(phi)
        normals = ring * np.cos(phi)[:, None]
        normals[:, 2] = np.sin(phi)
    else:
        raise ValueError(f"unknown shape kind: {kind!r}")
    return PointCloud(points=pts, normals=normals)
