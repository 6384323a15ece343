"""Count-Min and Count-Sketch baselines for per-coordinate sum recovery.

Both sketches hash coordinate indices with seeded multiply-shift functions
over 64-bit words; all seeds derive from one master seed so runs are
reproducible.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .exceptions import InvalidConfig, UnsupportedNegative
from .vector import SparseVector

_MASK64 = (1 << 64) - 1


class MultiplyShiftHash:
    """``h(x) = (((a*x + b) mod 2^64) >> 32) * m >> 32`` for ``m < 2^32``.

    ``a`` is odd; the top 32 bits of the affine map are scaled into
    ``[0, m)``. With ``m = 2`` the result doubles as a sign bit.
    """

    def __init__(self, a: int, b: int, m: int):
        if not 0 < m < 1 << 32:
            raise InvalidConfig(f"hash range {m} out of bounds")
        self.a = np.uint64(a | 1)
        self.b = np.uint64(b)
        self.m = np.uint64(m)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            top = (self.a * x + self.b) >> np.uint64(32)
            return ((top * self.m) >> np.uint64(32)).astype(np.int64)


def _seeds(seed: Optional[int], n: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, _MASK64, size=n, dtype=np.uint64, endpoint=True)]


class _HashedTable:
    def __init__(self, depth: int, width: int, seed: Optional[int], signed: bool):
        if depth < 1 or width < 1:
            raise InvalidConfig(f"depth and width must be positive, got {depth}x{width}")
        self.depth = int(depth)
        self.width = int(width)
        self.seed = seed
        self.table = np.zeros((self.depth, self.width))
        raw = _seeds(seed, 4 * self.depth)
        self._index = [MultiplyShiftHash(raw[2 * r], raw[2 * r + 1], self.width) for r in range(self.depth)]
        self._sign = (
            [MultiplyShiftHash(raw[2 * self.depth + 2 * r], raw[2 * self.depth + 2 * r + 1], 2)
             for r in range(self.depth)]
            if signed
            else None
        )

    @property
    def cells(self) -> int:
        return self.depth * self.width

    def columns(self, indices) -> np.ndarray:
        """Column of every index in every row, shape ``(depth, len(indices))``."""
        return np.stack([h(indices) for h in self._index])

    def signs(self, indices) -> np.ndarray:
        return np.stack([2 * h(indices) - 1 for h in self._sign]).astype(np.float64)

    @staticmethod
    def _aggregate(indices, values):
        idx = np.asarray(indices, dtype=np.int64).ravel()
        val = np.asarray(values, dtype=np.float64).ravel()
        if idx.shape != val.shape:
            raise ValueError("indices and values must have the same length")
        uniq, inv = np.unique(idx, return_inverse=True)
        return uniq, np.bincount(inv, weights=val, minlength=uniq.size)


class CountMin(_HashedTable):
    """Count-Min sketch; answers are never below the true non-negative sum."""

    def __init__(self, depth: int, width: int, seed: Optional[int] = None):
        super().__init__(depth, width, seed, signed=False)

    @classmethod
    def with_budget(cls, cells: int, depth: int = 5, seed: Optional[int] = None) -> "CountMin":
        return cls(depth, sketch_width_for(cells, depth), seed)

    def update(self, index: int, value: float = 1.0) -> None:
        if value < 0:
            raise UnsupportedNegative(f"Count-Min cannot absorb negative update {value!r}")
        cols = self.columns([index])[:, 0]
        self.table[np.arange(self.depth), cols] += value

    def update_many(self, indices, values) -> None:
        """Same table as calling :meth:`update` once per ``(index, value)`` pair."""
        uniq, sums = self._aggregate(indices, values)
        if np.any(np.asarray(values) < 0):
            raise UnsupportedNegative("Count-Min cannot absorb negative updates")
        cols = self.columns(uniq)
        for r in range(self.depth):
            self.table[r] += np.bincount(cols[r], weights=sums, minlength=self.width)

    def update_vector(self, v: SparseVector) -> None:
        self.update_many(v.indices, v.values)

    def query(self, index: int) -> float:
        return float(self.query_many([index])[0])

    def query_many(self, indices) -> np.ndarray:
        cols = self.columns(np.asarray(indices, dtype=np.int64))
        return self.table[np.arange(self.depth)[:, None], cols].min(axis=0)


class CountSketch(_HashedTable):
    """Count-Sketch with median-of-rows estimates (a.k.a. Count-Median)."""

    def __init__(self, depth: int, width: int, seed: Optional[int] = None):
        super().__init__(depth, width, seed, signed=True)

    @classmethod
    def with_budget(cls, cells: int, depth: int = 5, seed: Optional[int] = None) -> "CountSketch":
        return cls(depth, sketch_width_for(cells, depth), seed)

    def update(self, index: int, value: float = 1.0) -> None:
        cols = self.columns([index])[:, 0]
        sg = self.signs([index])[:, 0]
        self.table[np.arange(self.depth), cols] += sg * value

    def update_many(self, indices, values) -> None:
        uniq, sums = self._aggregate(indices, values)
        cols = self.columns(uniq)
        sg = self.signs(uniq)
        for r in range(self.depth):
            self.table[r] += np.bincount(cols[r], weights=sg[r] * sums, minlength=self.width)

    def update_vector(self, v: SparseVector) -> None:
        self.update_many(v.indices, v.values)

    def query(self, index: int) -> float:
        return float(self.query_many([index])[0])

    def query_many(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        cols = self.columns(idx)
        est = self.signs(idx) * self.table[np.arange(self.depth)[:, None], cols]
        return np.median(est, axis=0)


class SignSplitCountMin:
    """Two Count-Min sketches, one per sign, for streams with negative entries.

    Each half gets about half of the cell budget; the estimate is the
    difference of the two one-sided estimates.
    """

    def __init__(self, depth: int, width: int, seed: Optional[int] = None, neg_width: Optional[int] = None):
        rng = np.random.default_rng(seed)
        s_pos, s_neg = (int(x) for x in rng.integers(0, 2**63, size=2))
        self.pos = CountMin(depth, width, s_pos)
        self.neg = CountMin(depth, width if neg_width is None else neg_width, s_neg)

    @classmethod
    def with_budget(cls, cells: int, depth: int = 5, seed: Optional[int] = None):
        # the negative half takes whatever the positive half leaves over
        width = max(1, cells // (2 * depth))
        return cls(depth, width, seed, neg_width=sketch_width_for(cells - depth * width, depth))

    @property
    def cells(self) -> int:
        return self.pos.cells + self.neg.cells

    def update_many(self, indices, values) -> None:
        idx = np.asarray(indices, dtype=np.int64).ravel()
        val = np.asarray(values, dtype=np.float64).ravel()
        up = val > 0
        self.pos.update_many(idx[up], val[up])
        self.neg.update_many(idx[~up], -val[~up])

    def update(self, index: int, value: float) -> None:
        self.update_many([index], [value])

    def query_many(self, indices) -> np.ndarray:
        return self.pos.query_many(indices) - self.neg.query_many(indices)

    def query(self, index: int) -> float:
        return float(self.query_many([index])[0])


def sketch_width_for(cells: int, depth: int) -> int:
    """Row width whose ``depth * width`` is closest to ``cells`` (at least 1)."""
    return max(1, math.floor(cells / depth + 0.5))
