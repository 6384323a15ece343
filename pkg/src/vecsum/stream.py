"""Merge-and-reduce summaries of unbounded vector streams.

Incoming points fill a leaf buffer. A full buffer is compressed into a
coreset and carried up a binary tree that holds at most one coreset per
level: an occupied level is merged with the carry, re-compressed and
cleared, exactly like binary addition. After ``n`` points only
``O(log n)`` coresets are alive.
"""
from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

from .coreset import Coreset, CoresetParams, coreset, estimate_mean, estimate_sum
from .exceptions import EmptyStream, InvalidConfig
from .vector import SparseVector, WeightedPointSet


def merge(a: Coreset, b: Coreset) -> WeightedPointSet:
    """Union of two summaries, weighted by the mass each one represents.

    The merged weighted mean is the mass-weighted average of the two means.
    A side with zero represented mass contributes nothing and is dropped.
    """
    ma, mb = float(a.represented_weight), float(b.represented_weight)
    if mb == 0.0 and ma == 0.0:
        raise InvalidConfig("cannot merge two summaries of zero mass")
    if mb == 0.0:
        return a.to_point_set()
    if ma == 0.0:
        return b.to_point_set()
    total = ma + mb
    u = np.concatenate([a.weights * (ma / total), b.weights * (mb / total)])
    u /= u.sum()
    return WeightedPointSet(
        a.points + b.points,
        u,
        mass=total,
        count=a.represented_count + b.represented_count,
        ids=np.concatenate([a.source_indices, b.source_indices]),
    )


def memory_bound(n: int, leaf_size: int, beta: int) -> int:
    """Worst-case stored points after ``n`` insertions."""
    if n < leaf_size:
        return leaf_size
    levels = math.ceil(math.log2(n / leaf_size)) + 1
    return leaf_size + levels * (beta + 1)


class StreamState:
    """Single-writer merge-and-reduce state.

    ``levels[l]`` holds the coreset of ``2**(l-1)`` consecutive full leaves.
    Points are labelled with their 0-based stream ordinal, so the
    ``source_indices`` of every summary are positions in the stream.
    """

    def __init__(self, params: CoresetParams, leaf_size: int):
        if leaf_size < 2 * (params.beta + 1):
            raise InvalidConfig(
                f"leaf_size={leaf_size} must be at least 2*(beta+1)={2 * (params.beta + 1)}"
            )
        self.params = params
        self.leaf_size = int(leaf_size)
        self.leaf_buffer: list[SparseVector] = []
        self._leaf_ids: list[int] = []
        self.levels: dict[int, Coreset] = {}
        self.max_level = 0
        self.total_count = 0
        self.peak_stored = 0
        self.compressions = 0

    def insert(self, p: SparseVector) -> "StreamState":
        self.leaf_buffer.append(p)
        self._leaf_ids.append(self.total_count)
        self.total_count += 1
        if len(self.leaf_buffer) == self.leaf_size:
            self._flush()
        stored = self.stored_points
        if stored > self.peak_stored:
            self.peak_stored = stored
        return self

    def extend(self, points: Iterable[SparseVector]) -> "StreamState":
        for p in points:
            self.insert(p)
        return self

    def _flush(self) -> None:
        leaf = WeightedPointSet.from_weights(self.leaf_buffer, np.ones(len(self.leaf_buffer)),
                                             ids=self._leaf_ids)
        self.leaf_buffer = []
        self._leaf_ids = []
        carry = coreset(leaf, self.params)
        self.compressions += 1
        level = 1
        while level in self.levels:
            carry = coreset(merge(self.levels.pop(level), carry), self.params)
            self.compressions += 1
            level += 1
        self.levels[level] = carry
        self.max_level = max(self.max_level, level)

    @property
    def stored_points(self) -> int:
        return len(self.leaf_buffer) + sum(len(c) for c in self.levels.values())

    def stored_scalars(self) -> int:
        buf = sum(p.nnz for p in self.leaf_buffer) + len(self.leaf_buffer)
        return buf + sum(c.stored_scalars() for c in self.levels.values())

    def occupied_levels(self) -> list[int]:
        return sorted(self.levels)

    def finalize(self) -> Coreset:
        """Union of the leaf buffer and every level coreset; the state is not modified."""
        if self.total_count == 0:
            raise EmptyStream("no points inserted")
        parts: list[Coreset] = []
        if self.leaf_buffer:
            parts.append(Coreset.from_point_set(
                WeightedPointSet.from_weights(self.leaf_buffer, ids=self._leaf_ids)))
        parts.extend(self.levels[l] for l in sorted(self.levels))
        result = parts[0]
        for part in parts[1:]:
            result = Coreset.from_point_set(merge(result, part))
        return result

    def compact(self) -> Coreset:
        """:meth:`finalize` followed by one more compression to at most ``beta + 1`` points."""
        return coreset(self.finalize().to_point_set(), self.params)

    def estimate_mean(self) -> np.ndarray:
        return estimate_mean(self.finalize())

    def estimate_sum(self) -> np.ndarray:
        return estimate_sum(self.finalize())

    def __repr__(self) -> str:
        return (f"StreamState(n={self.total_count}, levels={self.occupied_levels()}, "
                f"buffered={len(self.leaf_buffer)}, beta={self.params.beta})")


def new_stream(params: CoresetParams, leaf_size: int) -> StreamState:
    return StreamState(params, leaf_size)


def insert(state: StreamState, p: SparseVector) -> StreamState:
    return state.insert(p)


def finalize(state: StreamState) -> Coreset:
    return state.finalize()


def default_leaf_size(beta: int, factor: Optional[int] = None) -> int:
    """A leaf size honouring the halving rule (``>= 2 * (beta + 1)``)."""
    return (factor or 2) * (beta + 1)
