"""Quantized probability simplex ``{k/d : k in N^n, sum k = d}``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np


def _compositions(total: int, parts: int):
    # Stars and bars, lexicographically descending in the first coordinate.
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(total + parts - 2 - prev)
        yield comp


@dataclass(frozen=True)
class BeliefGrid:
    n: int
    d: int
    counts: np.ndarray = field(repr=False)  # (K, n) integer coordinates
    _codes: np.ndarray = field(repr=False)
    _order: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n: int, d: int) -> "BeliefGrid":
        if n < 2 or d < 1:
            raise ValueError("need n >= 2 and d >= 1")
        counts = np.array(list(_compositions(d, n)), dtype=np.int64)
        codes = cls._encode(counts, d)
        order = np.argsort(codes)
        counts.setflags(write=False)
        return cls(n, d, counts, codes[order], order)

    @staticmethod
    def _encode(counts: np.ndarray, d: int) -> np.ndarray:
        base = (d + 1) ** np.arange(counts.shape[-1], dtype=np.int64)
        return counts @ base

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def expected_size(self) -> int:
        return comb(self.n + self.d - 1, self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return self.counts / self.d

    def index_of_counts(self, counts) -> np.ndarray:
        codes = self._encode(np.asarray(counts, dtype=np.int64), self.d)
        pos = np.searchsorted(self._codes, codes)
        return self._order[pos]

    def quantize(self, p) -> np.ndarray:
        """Nearest lattice point (Euclidean) of each belief row, as counts.

        Scales by ``d``, floors, then hands the missing units to the
        coordinates with the largest fractional parts.
        """
        x = np.clip(np.atleast_2d(np.asarray(p, dtype=float)), 0.0, None)
        x = x / x.sum(axis=1, keepdims=True) * self.d
        f = np.floor(x)
        frac = x - f
        missing = self.d - f.sum(axis=1).astype(np.int64)
        # Hand one unit each to the `missing` largest fractional parts
        # (stable sort: lower index wins ties).
        order = np.argsort(-frac, axis=1, kind="stable")
        bump = np.arange(self.n)[None, :] < missing[:, None]
        np.put_along_axis(f, order, np.take_along_axis(f, order, axis=1) + bump, axis=1)
        return f.astype(np.int64)

    def nearest(self, p) -> np.ndarray:
        """Grid indices of the nearest points to each belief row."""
        return self.index_of_counts(self.quantize(p))
