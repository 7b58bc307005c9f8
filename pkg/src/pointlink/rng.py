"""Seedable random source: identical seed, identical draw sequence.

One `RandomSource` per consumer; sources are not shareable across threads.
`derive(name)` gives an independent, reproducibly-named child stream so a
single experiment seed can fan out to init / data / channel / sampling noise
without the streams aliasing each other.
"""

from __future__ import annotations

import zlib

import numpy as np


class RandomSource:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, name: str) -> "RandomSource":
        """Child stream keyed by `name`; deterministic across runs."""
        child = (self.seed * 1000003 + zlib.crc32(name.encode())) % (2 ** 63)
        return RandomSource(child)

    def uniform(self, shape=None, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def normal(self, shape=None, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=shape)

    def integers(self, low: int, high: int, shape=None) -> np.ndarray:
        return self._gen.integers(low, high, size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def gumbel(self, shape) -> np.ndarray:
        """i.i.d. Gumbel(0,1) via -log(-log(u)), u uniform on (0,1).

        The uniform draw lives in [tiny, 1), excluding both endpoints of
        (0,1) so the double log never sees 0.
        """
        u = self._gen.uniform(np.finfo(np.float64).tiny, 1.0, size=shape)
        return -np.log(-np.log(u))


def gumbel_noise(source: RandomSource | None, shape) -> np.ndarray:
    """Gumbel(0,1) samples, or zeros when `source` is None (deterministic
    eval mode)."""
    if source is None:
        return np.zeros(shape)
    return source.gumbel(shape)
