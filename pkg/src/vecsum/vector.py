"""Sparse vectors, weighted point sets and the weighted statistics built on them.

Dense vectors are plain 1-d ``float64`` numpy arrays. Their dimension is
discovered lazily (``1 + max index``) and every dense operation zero-extends
its operands, so the logical dimension of the data is never fixed up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import InvalidIndex, InvalidInput, InvalidScalar

SIMPLEX_TOL = 1e-9


class SparseVector:
    """Immutable sparse vector in canonical form.

    Indices are strictly increasing non-negative integers and no stored value
    is zero. Build instances through :func:`sparse_from_pairs`,
    :meth:`from_dense` or :meth:`from_arrays`; the raw constructor trusts its
    input.
    """

    __slots__ = ("indices", "values")

    def __init__(self, indices: np.ndarray, values: np.ndarray):
        indices.setflags(write=False)
        values.setflags(write=False)
        self.indices = indices
        self.values = values

    @classmethod
    def from_arrays(cls, indices, values) -> "SparseVector":
        """Canonicalize parallel index/value arrays (duplicates are summed)."""
        idx = np.asarray(indices)
        val = np.asarray(values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise InvalidInput("indices and values must be 1-d arrays of equal length")
        if idx.size == 0:
            return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
        if not np.issubdtype(idx.dtype, np.integer):
            if not np.all(np.mod(idx, 1) == 0):
                raise InvalidIndex("indices must be integers")
        idx = idx.astype(np.int64)
        if idx.min() < 0:
            raise InvalidIndex(f"negative index {int(idx.min())}")
        if not np.all(np.isfinite(val)):
            raise InvalidInput("sparse values must be finite")
        if idx.size > 1 and not np.all(idx[1:] > idx[:-1]):
            uniq, inv = np.unique(idx, return_inverse=True)
            val = np.bincount(inv, weights=val, minlength=uniq.size)
            idx = uniq
        keep = val != 0.0
        if not keep.all():
            idx, val = idx[keep], val[keep]
        return cls(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64))

    @classmethod
    def from_dense(cls, values) -> "SparseVector":
        arr = np.asarray(values, dtype=np.float64).ravel()
        nz = np.flatnonzero(arr)
        return cls(nz.astype(np.int64), arr[nz].copy())

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @property
    def dim(self) -> int:
        """Smallest dense dimension that holds this vector."""
        return int(self.indices[-1]) + 1 if self.indices.size else 0

    def to_dense(self, dim: Optional[int] = None) -> np.ndarray:
        d = self.dim if dim is None else max(dim, self.dim)
        out = np.zeros(d)
        out[self.indices] = self.values
        return out

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def __len__(self) -> int:
        return self.nnz

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.indices.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"SparseVector({self.pairs()!r})"


def sparse_from_pairs(pairs: Iterable[tuple[int, float]]) -> SparseVector:
    """Build a canonical :class:`SparseVector` from ``(index, value)`` pairs.

    Duplicate indices are summed, zero results dropped and indices sorted.

    >>> sparse_from_pairs([(3, 1.0), (3, 2.0)])
    SparseVector([(3, 3.0)])
    """
    pairs = list(pairs)
    if not pairs:
        return SparseVector.from_arrays([], [])
    for i, _ in pairs:
        if isinstance(i, bool) or int(i) != i:
            raise InvalidIndex(f"index {i!r} is not an integer")
        if i < 0:
            raise InvalidIndex(f"negative index {i}")
    idx = np.fromiter((int(i) for i, _ in pairs), dtype=np.int64, count=len(pairs))
    val = np.fromiter((float(v) for _, v in pairs), dtype=np.float64, count=len(pairs))
    order = np.argsort(idx, kind="stable")
    return SparseVector.from_arrays(idx[order], val[order])


def check_distribution(weights, *, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate that ``weights`` lie on the unit simplex and return them as an array."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidInput("a distribution needs at least one weight")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidInput("distribution weights must be finite and non-negative")
    if abs(math.fsum(w) - 1.0) > tol:
        raise InvalidInput(f"weights sum to {math.fsum(w)!r}, not 1")
    return w


def normalize_weights(weights) -> tuple[np.ndarray, float]:
    """Scale non-negative weights onto the simplex; returns ``(u, original_mass)``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidInput("need at least one weight")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidInput("weights must be finite and non-negative")
    mass = math.fsum(w)
    if mass <= 0:
        raise InvalidInput("weights sum to zero")
    return w / mass, mass


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Points with a distribution ``u`` over them.

    ``mass`` is the pre-normalization total weight and ``count`` the number of
    raw stream points the set stands for; both are needed to turn means back
    into sums and to merge summaries of unequal size. ``ids`` labels each
    point (input positions by default, stream ordinals inside a stream).
    """

    points: Sequence[SparseVector]
    u: np.ndarray
    mass: float = 1.0
    count: Optional[int] = None
    ids: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if len(self.points) == 0:
            raise InvalidInput("a point set needs at least one point")
        u = check_distribution(self.u)
        if u.size != len(self.points):
            raise InvalidInput(f"{len(self.points)} points but {u.size} weights")
        object.__setattr__(self, "points", list(self.points))
        object.__setattr__(self, "u", u)
        if self.count is None:
            object.__setattr__(self, "count", len(self.points))
        ids = np.arange(len(self.points)) if self.ids is None else np.asarray(self.ids, dtype=np.int64)
        if ids.shape != (len(self.points),):
            raise InvalidInput("ids must have one entry per point")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_weights(cls, points, weights=None, *, count=None, ids=None) -> "WeightedPointSet":
        """Normalize arbitrary non-negative weights (default: all ones)."""
        points = list(points)
        if weights is None:
            weights = np.ones(len(points))
        u, mass = normalize_weights(weights)
        return cls(points, u, mass=mass, count=count, ids=ids)

    @classmethod
    def uniform(cls, points, *, ids=None) -> "WeightedPointSet":
        points = list(points)
        n = len(points)
        return cls(points, np.full(n, 1.0 / n) if n else np.empty(0), mass=float(n), ids=ids)

    def __len__(self) -> int:
        return len(self.points)


def support_block(points: Sequence[SparseVector]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sparse points into a dense block over the union of their supports.

    Returns ``(columns, block)`` where ``block[i, j]`` is the value of point
    ``i`` at index ``columns[j]``. Columns that are zero everywhere are never
    materialized, so the block width is at most the total nnz.
    """
    n = len(points)
    sizes = np.fromiter((p.indices.size for p in points), dtype=np.int64, count=n)
    if sizes.sum() == 0:
        return np.empty(0, dtype=np.int64), np.zeros((n, 0))
    all_idx = np.concatenate([p.indices for p in points])
    all_val = np.concatenate([p.values for p in points])
    rows = np.repeat(np.arange(n), sizes)
    columns, inv = np.unique(all_idx, return_inverse=True)
    block = np.zeros((n, columns.size))
    block[rows, inv] = all_val
    return columns, block


def _pairwise_weighted_sum(u: np.ndarray, block: np.ndarray) -> np.ndarray:
    # numpy only uses pairwise summation along the contiguous axis
    return np.ascontiguousarray((block * u[:, None]).T).sum(axis=1)


def weighted_mean_block(P: WeightedPointSet) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean restricted to the union support: ``(columns, values)``."""
    columns, block = support_block(P.points)
    return columns, _pairwise_weighted_sum(P.u, block)


def _densify(columns: np.ndarray, values: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros(dim)
    out[columns] = values
    return out


def _max_dim(points: Iterable[SparseVector]) -> int:
    return max((p.dim for p in points), default=0)


def weighted_mean(P: WeightedPointSet) -> np.ndarray:
    """Dense weighted mean ``sum_i u_i p_i`` with dimension ``1 + max index``."""
    columns, values = weighted_mean_block(P)
    return _densify(columns, values, _max_dim(P.points))


def weighted_variance(P: WeightedPointSet, mean: Optional[np.ndarray] = None) -> float:
    """Sum of weighted squared distances ``sum_i u_i ||p_i - mean||^2``."""
    if mean is None:
        columns, block = support_block(P.points)
        centre = _pairwise_weighted_sum(P.u, block)
        diff = block - centre
        off_support = 0.0
    else:
        mean = np.asarray(mean, dtype=np.float64)
        dim = max(mean.size, _max_dim(P.points))
        columns, block = support_block(P.points)
        full = np.zeros(dim)
        full[: mean.size] = mean
        diff = block - full[columns]
        rest = np.delete(full, columns)
        off_support = float(rest @ rest)
    sq = np.einsum("ij,ij->i", diff, diff) + off_support
    return float(max(_pairwise_weighted_sum(P.u, sq[:, None])[0], 0.0))


def axpy(acc: np.ndarray, scale: float, v: SparseVector) -> np.ndarray:
    """Return ``acc + scale * v`` as a new dense vector, zero-extending ``acc``."""
    if not math.isfinite(scale):
        raise InvalidScalar(f"scale must be finite, got {scale!r}")
    acc = np.asarray(acc, dtype=np.float64)
    out = np.zeros(max(acc.size, v.dim))
    out[: acc.size] = acc
    if scale != 0.0:
        out[v.indices] += scale * v.values
    return out


def squared_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Euclidean distance between dense vectors of possibly different length."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = max(a.size, b.size)
    diff = np.zeros(d)
    diff[: a.size] += a
    diff[: b.size] -= b
    return float(diff @ diff)
