"""Synthetic desk-scale datasets and seeded splits."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from . import cloudio
from .geometry import PointCloud, synth_shape
from .rng import RandomSource

SHAPE_KINDS = ("sphere", "cube-surface", "torus", "plane")


def make_dataset(count: int, n_points: int, source: RandomSource,
                 kinds=SHAPE_KINDS) -> list[PointCloud]:
    """`count` shapes cycling through `kinds`, each its own derived stream."""
    clouds = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        clouds.append(synth_shape(kind, n_points, source.derive(f"shape-{i}")))
    return clouds


def split_dataset(clouds, source: RandomSource,
                  fractions=(0.7, 0.1, 0.2)):
    """Seeded-random train/val/test split; every part gets at least one
    cloud when there are three or more."""
    n = len(clouds)
    order = source.permutation(n)
    n_train = max(1, int(round(fractions[0] * n)))
    n_val = max(1 if n >= 3 else 0, int(round(fractions[1] * n)))
    n_train = min(n_train, n - n_val - (1 if n >= 3 else 0))
    train = [clouds[i] for i in order[:n_train]]
    val = [clouds[i] for i in order[n_train:n_train + n_val]]
    test = [clouds[i] for i in order[n_train + n_val:]]
    return train, val, test


def dataset_hash(clouds) -> str:
    h = hashlib.sha256()
    for c in clouds:
        h.update(np.ascontiguousarray(c.points, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def save_dataset(directory, clouds, fmt: str = "ply"):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, cloud in enumerate(clouds):
        if fmt == "ply":
            path = directory / f"cloud_{i:04d}.ply"
            cloudio.write_ply(path, cloud)
        elif fmt == "bin":
            path = directory / f"cloud_{i:04d}.pcb"
            cloudio.write_cloud_binary(path, cloud)
        else:
            raise ValueError(f"unknown dataset format {fmt!r}")
        paths.append(path)
    return paths


def load_dataset(directory) -> list[PointCloud]:
    directory = Path(directory)
    paths = sorted(list(directory.glob("*.ply")) + list(directory.glob("*.pcb")))
    if not paths:
        raise FileNotFoundError(f"no .ply or .pcb clouds under {directory}")
    return [cloudio.load_cloud(p) for p in paths]
