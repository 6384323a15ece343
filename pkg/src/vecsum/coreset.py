"""Deterministic coresets for the weighted mean of a point set.

The construction lifts every centred point ``p_i - mean`` into one extra
dimension (the lift height is the weighted mean distance ``x`` to the mean),
normalizes the lifted points onto the unit sphere and re-weights them so
their weighted mean sits exactly at ``(0, ..., 0, x / v)``. Frank-Wolfe then
finds a sparse convex combination of the shifted unit points that lands near
the origin, and its weights are mapped back to the original points.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidConfig, InvalidInput, NumericalFailure
from .vector import (
    SIMPLEX_TOL,
    SparseVector,
    WeightedPointSet,
    _pairwise_weighted_sum,
    check_distribution,
    support_block,
    weighted_mean,
)

DEFAULT_ALPHA = 4.0


class SelectionRule(str, enum.Enum):
    """Vertex selection inside Frank-Wolfe.

    ``FARTHEST`` picks the point of ``H`` farthest from the current iterate;
    ``LINEAR_ORACLE`` picks the point minimizing ``<h, c>`` (the classic
    Frank-Wolfe linear minimization step for ``||c||^2``).
    """

    FARTHEST = "farthest"
    LINEAR_ORACLE = "linear"

    @classmethod
    def parse(cls, value) -> "SelectionRule":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidConfig(f"unknown selection rule {value!r}") from None


@dataclass(frozen=True)
class CoresetParams:
    """Size budget of a coreset.

    ``beta`` is the number of Frank-Wolfe iterations, so a coreset holds at
    most ``beta + 1`` points; for an error parameter ``eps`` use
    :meth:`from_epsilon`, which sets ``beta = ceil(alpha / eps)``.
    """

    beta: int
    alpha: float = DEFAULT_ALPHA
    degenerate_tol: float = 1e-12
    rule: SelectionRule = SelectionRule.LINEAR_ORACLE

    def __post_init__(self):
        if isinstance(self.beta, bool) or int(self.beta) != self.beta or self.beta < 1:
            raise InvalidConfig(f"beta must be a positive integer, got {self.beta!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidConfig(f"alpha must be positive, got {self.alpha!r}")
        if self.degenerate_tol < 0:
            raise InvalidConfig("degenerate_tol must be non-negative")
        object.__setattr__(self, "beta", int(self.beta))
        object.__setattr__(self, "rule", SelectionRule.parse(self.rule))

    @classmethod
    def from_epsilon(cls, eps: float, alpha: float = DEFAULT_ALPHA, **kw) -> "CoresetParams":
        if not 0 < eps < 1:
            raise InvalidConfig(f"eps must lie in (0, 1), got {eps!r}")
        return cls(beta=math.ceil(alpha / eps), alpha=alpha, **kw)

    @property
    def epsilon(self) -> float:
        return self.alpha / self.beta


@dataclass(frozen=True, eq=False)
class Embedding:
    """Lifted, normalized copy of a weighted point set.

    Row ``i`` of ``q`` is ``(p_i - mean, x) / aug_norms[i]`` restricted to the
    columns in ``columns`` plus one trailing lift coordinate. The shifted set
    ``H = q - shift`` is never stored; :meth:`shifted` builds it on demand.
    """

    x: float
    v: float
    q: np.ndarray
    s: np.ndarray
    shift: np.ndarray
    aug_norms: np.ndarray
    source_index: np.ndarray
    mean: Optional[np.ndarray] = None
    columns: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.q.shape[0]

    def shifted(self) -> np.ndarray:
        return self.q - self.shift

    def identity_residual(self) -> float:
        """``||sum_i s_i q_i - shift||``; zero up to rounding."""
        r = _pairwise_weighted_sum(self.s, self.q) - self.shift
        return float(np.sqrt(r @ r))


class Degenerate:
    """Signal returned by :func:`embed` when every weighted point equals the mean."""

    __slots__ = ("mean",)

    def __init__(self, mean: np.ndarray):
        self.mean = mean

    def __repr__(self) -> str:
        return "Degenerate()"


@dataclass(frozen=True, eq=False)
class Coreset:
    """Weighted subset of an input point set.

    ``points`` are the input vectors themselves (same objects, sparsity
    intact), ``weights`` a distribution over them, and ``source_indices``
    the ids of the chosen inputs. ``represented_count`` and
    ``represented_weight`` record how many raw points, and how much total
    weight, the coreset summarizes.
    """

    points: list
    source_indices: np.ndarray
    weights: np.ndarray
    represented_count: int
    represented_weight: float

    def __post_init__(self):
        if len(self.points) == 0:
            raise InvalidInput("a coreset holds at least one point")
        w = check_distribution(self.weights)
        if w.size != len(self.points):
            raise InvalidInput("one weight per coreset point required")
        src = np.asarray(self.source_indices, dtype=np.int64)
        if src.shape != w.shape:
            raise InvalidInput("one source index per coreset point required")
        object.__setattr__(self, "points", list(self.points))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "source_indices", src)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_point_set(cls, P: WeightedPointSet) -> "Coreset":
        """Exact (uncompressed) coreset holding every point of ``P``."""
        return cls(P.points, P.ids, P.u, int(P.count), float(P.mass))

    def to_point_set(self) -> WeightedPointSet:
        return WeightedPointSet(
            self.points,
            self.weights,
            mass=self.represented_weight,
            count=self.represented_count,
            ids=self.source_indices,
        )

    @property
    def nnz(self) -> int:
        return sum(p.nnz for p in self.points)

    def stored_scalars(self) -> int:
        """Memory footprint: every stored entry plus a weight and an id per point."""
        return self.nnz + 2 * len(self.points)


def embed(P: WeightedPointSet, degenerate_tol: float = 1e-12):
    """Lift and normalize ``P``; returns an :class:`Embedding` or :class:`Degenerate`."""
    columns, block = support_block(P.points)
    u = P.u
    centre = _pairwise_weighted_sum(u, block)
    diff = block - centre
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    x = float(_pairwise_weighted_sum(u, dist[:, None])[0])
    scale = float(np.sqrt(np.einsum("ij,ij->i", block, block)).max()) if block.size else 0.0
    if x <= degenerate_tol * scale or x == 0.0:
        return Degenerate(centre)

    aug = np.sqrt(dist * dist + x * x)
    v = float(_pairwise_weighted_sum(u, aug[:, None])[0])
    q = np.empty((block.shape[0], block.shape[1] + 1))
    q[:, :-1] = diff / aug[:, None]
    q[:, -1] = x / aug
    s = u * aug / v
    shift = np.zeros(q.shape[1])
    shift[-1] = x / v
    return Embedding(
        x=x,
        v=v,
        q=q,
        s=s,
        shift=shift,
        aug_norms=aug,
        source_index=np.arange(block.shape[0]),
        mean=centre,
        columns=columns,
    )


@dataclass
class MinNormResult:
    picked: np.ndarray
    wprime: np.ndarray
    c: np.ndarray
    norms: list = field(default_factory=list)


def min_norm_point(
    H: np.ndarray,
    beta: int,
    rule=SelectionRule.LINEAR_ORACLE,
    start: Optional[int] = None,
    tol: float = 1e-12,
) -> MinNormResult:
    """Frank-Wolfe with exact line search towards the min-norm point of conv(H).

    Starts at vertex ``start`` (default 0) and runs at most ``beta``
    iterations, each projecting the origin onto the segment between the
    iterate and the selected vertex. Weights are kept per vertex so the
    iterate is always an explicit convex combination. Ties go to the lowest
    index. Stops early once ``||c||^2 <= tol^2`` or a step makes no progress.
    """
    rule = SelectionRule.parse(rule)
    n = H.shape[0]
    if n == 0:
        raise InvalidInput("cannot run Frank-Wolfe on an empty set")
    if beta < 1:
        raise InvalidConfig("beta must be >= 1")
    i0 = 0 if start is None else int(start)
    weights = np.zeros(n)
    weights[i0] = 1.0
    c = H[i0].copy()
    sq_norms = np.einsum("ij,ij->i", H, H) if rule is SelectionRule.FARTHEST else None
    cc = float(c @ c)
    norms = [math.sqrt(cc)]
    for _ in range(beta):
        if cc <= tol * tol:
            break
        hc = H @ c
        if rule is SelectionRule.FARTHEST:
            j = int(np.argmax(sq_norms - 2.0 * hc))
        else:
            j = int(np.argmin(hc))
        d = c - H[j]
        dd = float(d @ d)
        if dd == 0.0:
            break
        gamma = min(max((cc - float(hc[j])) / dd, 0.0), 1.0)
        if gamma == 0.0:
            break
        c_new = c - gamma * d
        cc_new = float(c_new @ c_new)
        if cc_new > cc:
            # rounding only; the exact projection never increases the norm
            break
        weights *= 1.0 - gamma
        weights[j] += gamma
        c, cc = c_new, cc_new
        norms.append(math.sqrt(cc))
    picked = np.flatnonzero(weights > 0)
    wprime = weights[picked]
    wprime = wprime / wprime.sum()
    return MinNormResult(picked=picked, wprime=wprime, c=c, norms=norms)


def fw_min_norm(emb: Embedding, beta: int, selection_rule=SelectionRule.LINEAR_ORACLE,
                tol: float = 1e-12) -> MinNormResult:
    """Run :func:`min_norm_point` on the shifted embedding ``H = q - shift``.

    The first iterate is the embedded point with the largest lifted norm
    (lowest index on ties), which keeps the whole construction deterministic.
    """
    if len(emb) == 0:
        raise InvalidInput("empty embedding")
    start = int(np.argmax(emb.aug_norms))
    return min_norm_point(emb.shifted(), beta, selection_rule, start=start, tol=tol)


def back_transform(emb: Embedding, picked, wprime) -> np.ndarray:
    """Map Frank-Wolfe weights on ``H`` to a distribution over the picked input points."""
    picked = np.asarray(picked, dtype=np.int64)
    wprime = np.asarray(wprime, dtype=np.float64)
    raw = emb.v * wprime / emb.aug_norms[emb.source_index[picked]]
    total = raw.sum()
    if not total > 0:
        raise NumericalFailure(f"back-transformed weights sum to {total!r}")
    return raw / total


def coreset(P: WeightedPointSet, params: CoresetParams, embedding=None) -> Coreset:
    """Compute a weighted subset of at most ``beta + 1`` points of ``P``.

    Small inputs (``len(P) <= beta + 1``) are returned verbatim and
    zero-variance inputs collapse to one representative point; both are
    exact. Otherwise the weighted mean of the result is within roughly
    ``alpha / beta`` of the variance of ``P`` (squared-norm sense).
    Pass ``embedding=embed(P)`` to reuse one embedding across budgets.
    """
    n = len(P)
    if n <= params.beta + 1:
        return Coreset.from_point_set(P)
    emb = embed(P, params.degenerate_tol) if embedding is None else embedding
    if isinstance(emb, Degenerate):
        k = int(np.argmax(P.u))
        return Coreset([P.points[k]], P.ids[[k]], np.ones(1), int(P.count), float(P.mass))
    fw = fw_min_norm(emb, params.beta, params.rule, tol=params.degenerate_tol)
    w = back_transform(emb, fw.picked, fw.wprime)
    src = emb.source_index[fw.picked]
    return Coreset(
        [P.points[i] for i in src],
        P.ids[src],
        w,
        int(P.count),
        float(P.mass),
    )


def estimate_mean(c: Coreset) -> np.ndarray:
    """Dense weighted mean of the coreset points."""
    return weighted_mean(c.to_point_set())


def estimate_sum(c: Coreset) -> np.ndarray:
    return c.represented_weight * estimate_mean(c)


def estimate_sparse(c: Coreset) -> SparseVector:
    """Coreset mean as a sparse vector (no dense allocation up to the max index)."""
    columns, block = support_block(c.points)
    return SparseVector.from_arrays(columns, _pairwise_weighted_sum(c.weights, block))


__all__ = [
    "CoresetParams",
    "Coreset",
    "Degenerate",
    "Embedding",
    "MinNormResult",
    "SelectionRule",
    "back_transform",
    "coreset",
    "embed",
    "estimate_mean",
    "estimate_sparse",
    "estimate_sum",
    "fw_min_norm",
    "min_norm_point",
    "SIMPLEX_TOL",
]
