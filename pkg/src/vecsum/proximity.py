"""Streaming proximity graph: per-user sparse summaries of average proximity.

Every location record moves one user. The proximity ``exp(-dist)`` from the
mover to every other positioned user becomes a 1-sparse vector appended to
the mover's row stream, and the same value is appended to the other user's
row at the mover's coordinate. Each row is a merge-and-reduce stream, so a
row costs ``O(log n)`` coresets instead of ``n`` exact counters.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional

import numpy as np

from .coreset import CoresetParams, estimate_sparse
from .exceptions import InvalidInput, UnknownUser
from .stream import StreamState
from .vector import SparseVector

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class LocationRecord:
    t: float
    user: str
    lon: float
    lat: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.t, self.lon, self.lat)):
            raise InvalidInput(f"non-finite coordinate in {self!r}")


def prox(a, b, *, scale: float = 1.0, metric: str = "planar") -> float:
    """``exp(-dist(a, b))``: 1 at distance zero, decaying towards 0."""
    return float(np.exp(-distance(a, b, scale=scale, metric=metric)))


def distance(a, b, *, scale: float = 1.0, metric: str = "planar"):
    """Planar Euclidean distance on ``(lon, lat)``, or haversine kilometres, times ``scale``.

    ``b`` may be an ``(m, 2)`` array, in which case a vector is returned.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if metric == "planar":
        diff = b - a
        return scale * np.sqrt(np.sum(diff * diff, axis=-1))
    if metric == "haversine":
        lon1, lat1 = np.radians(a[..., 0]), np.radians(a[..., 1])
        lon2, lat2 = np.radians(b[..., 0]), np.radians(b[..., 1])
        h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
        return scale * 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    raise InvalidInput(f"unknown metric {metric!r}")


class ProximityBook:
    """Per-user row summaries of the time-averaged proximity matrix.

    Users are interned to dense 0-based indices in order of first
    appearance. ``cutoff`` drops proximities below it before they reach a
    row, bounding fan-out when most users are far apart. The diagonal
    (self-proximity, always 1) is not stored.
    """

    def __init__(
        self,
        params: Optional[CoresetParams] = None,
        leaf_size: Optional[int] = None,
        *,
        scale: float = 1.0,
        metric: str = "planar",
        cutoff: Optional[float] = None,
    ):
        self.params = params or CoresetParams(beta=32)
        self.leaf_size = leaf_size or 2 * (self.params.beta + 1)
        self.scale = scale
        self.metric = metric
        self.cutoff = cutoff
        self.id_map: dict[str, int] = {}
        self.users: list[str] = []
        self._pos = np.zeros((0, 2))
        self._has_pos = np.zeros(0, dtype=bool)
        self.rows: list[StreamState] = []
        self.degree_stream = StreamState(self.params, self.leaf_size)

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def pos(self) -> np.ndarray:
        return self._pos[: self.n]

    def update_count(self, user) -> int:
        return self.rows[self._lookup(user)].total_count

    def intern(self, user: str) -> int:
        idx = self.id_map.get(user)
        if idx is not None:
            return idx
        idx = len(self.users)
        self.id_map[user] = idx
        self.users.append(user)
        if idx >= self._pos.shape[0]:
            grow = max(16, 2 * self._pos.shape[0])
            self._pos = np.vstack([self._pos, np.zeros((grow, 2))])
            self._has_pos = np.concatenate([self._has_pos, np.zeros(grow, dtype=bool)])
        self.rows.append(StreamState(self.params, self.leaf_size))
        return idx

    def _lookup(self, user) -> int:
        if isinstance(user, (int, np.integer)) and not isinstance(user, bool) and user not in self.id_map:
            if 0 <= user < self.n:
                return int(user)
        try:
            return self.id_map[user]
        except KeyError:
            raise UnknownUser(user) from None

    def _emit(self, row: int, col: int, value: float) -> None:
        self.rows[row].insert(SparseVector(np.array([col], dtype=np.int64), np.array([value])))

    def move(self, rec: LocationRecord) -> tuple[int, np.ndarray, np.ndarray]:
        """Update the mover's position; return its index and proximities to the others.

        Proximities below ``cutoff`` (and underflowed zeros) are left out.
        Row streams are not touched.
        """
        i = self.intern(rec.user)
        self._pos[i] = (rec.lon, rec.lat)
        self._has_pos[i] = True
        others = np.flatnonzero(self._has_pos[: self.n])
        others = others[others != i]
        values = np.exp(-distance(self._pos[i], self._pos[others], scale=self.scale, metric=self.metric))
        keep = values > 0.0
        if self.cutoff is not None:
            keep &= values >= self.cutoff
        return i, others[keep], values[keep]

    def ingest(self, rec: LocationRecord) -> list[tuple[int, int, float]]:
        """Move ``rec.user`` and stream the proximities it induces.

        Returns the emitted ``(row, column, value)`` updates; every update
        ``(i, j, v)`` is paired with ``(j, i, v)``.
        """
        i, others, values = self.move(rec)
        emitted = []
        for j, val in zip(others.tolist(), values.tolist()):
            self._emit(i, j, val)
            self._emit(j, i, val)
            emitted.append((i, j, val))
            emitted.append((j, i, val))
        return emitted

    def ingest_edge(self, a: str, b: str, weight: float = 1.0) -> list[tuple[int, int, float]]:
        """Edge-list mode: ``weight`` goes to row ``a`` at ``b`` and to row ``b`` at ``a``.

        The same two 1-sparse vectors also feed :attr:`degree_stream`, whose
        sum approximates the weighted degree of every node.
        """
        if not math.isfinite(weight):
            raise InvalidInput(f"non-finite edge weight {weight!r}")
        ia, ib = self.intern(a), self.intern(b)
        if weight == 0.0:
            return []
        self._emit(ia, ib, weight)
        self._emit(ib, ia, weight)
        self.degree_stream.insert(SparseVector(np.array([ia], dtype=np.int64), np.array([weight])))
        self.degree_stream.insert(SparseVector(np.array([ib], dtype=np.int64), np.array([weight])))
        return [(ia, ib, weight), (ib, ia, weight)]

    def average_row(self, user) -> SparseVector:
        """Estimated mean of the user's row stream, indexed by user index."""
        row = self.rows[self._lookup(user)]
        if row.total_count == 0:
            return SparseVector.from_arrays([], [])
        return estimate_sparse(row.finalize())

    def row_sum(self, user) -> SparseVector:
        row = self.rows[self._lookup(user)]
        if row.total_count == 0:
            return SparseVector.from_arrays([], [])
        est = self.average_row(user)
        return SparseVector(est.indices.copy(), est.values * row.total_count)

    def degree_estimate(self) -> SparseVector:
        if self.degree_stream.total_count == 0:
            return SparseVector.from_arrays([], [])
        c = self.degree_stream.finalize()
        est = estimate_sparse(c)
        return SparseVector(est.indices.copy(), est.values * c.represented_weight)

    def heavy_hitters(self, user, k: int) -> list[tuple[str, float]]:
        """Top-``k`` entries of :meth:`average_row`, largest first, ties by user index."""
        if k < 1:
            raise InvalidInput("k must be >= 1")
        row = self.average_row(user)
        order = np.lexsort((row.indices, -row.values))[:k]
        return [(self.users[int(row.indices[o])], float(row.values[o])) for o in order]

    def stored_scalars(self) -> int:
        return sum(r.stored_scalars() for r in self.rows)


# -- input parsing ---------------------------------------------------------

def _open_text(source) -> IO[str]:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        return open(source, "r", encoding="utf-8")
    return source


def parse_records(lines: Iterable[str], fmt: str = "auto") -> Iterator[LocationRecord]:
    """Yield location records from JSON lines ``{"t","id","lon","lat"}`` or CSV ``t,id,lon,lat``."""
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind = fmt
        if kind == "auto":
            kind = "jsonl" if line.startswith("{") else "csv"
        try:
            if kind == "jsonl":
                obj = json.loads(line)
                yield LocationRecord(float(obj["t"]), str(obj["id"]), float(obj["lon"]), float(obj["lat"]))
            else:
                t, uid, lon, lat = next(csv.reader(io.StringIO(line)))
                if t.strip().lower() == "t":
                    continue  # header row
                yield LocationRecord(float(t), uid.strip(), float(lon), float(lat))
        except (ValueError, KeyError, TypeError, StopIteration, json.JSONDecodeError) as exc:
            raise InvalidInput(f"line {lineno}: cannot parse location record: {exc}") from exc


def parse_edges(lines: Iterable[str]) -> Iterator[tuple[str, str, float]]:
    """Whitespace edge list ``src dst [weight]``; ``#`` starts a comment."""
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise InvalidInput(f"line {lineno}: expected 'src dst [weight]', got {raw.strip()!r}")
        try:
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise InvalidInput(f"line {lineno}: bad weight {parts[2]!r}") from exc
        yield parts[0], parts[1], w


def read_records(source, fmt: str = "auto") -> list[LocationRecord]:
    fh = _open_text(source)
    try:
        return list(parse_records(fh, fmt))
    finally:
        if fh is not source:
            fh.close()


def read_edges(source) -> list[tuple[str, str, float]]:
    fh = _open_text(source)
    try:
        return list(parse_edges(fh))
    finally:
        if fh is not source:
            fh.close()


def write_heavy_hitters(book: ProximityBook, out: IO[str], k: int, users=None) -> int:
    """Write ``user,neighbor,rank,estimate`` CSV rows; returns the number of rows."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["user", "neighbor", "rank", "estimate"])
    rows = 0
    for user in (book.users if users is None else users):
        for rank, (nbr, est) in enumerate(book.heavy_hitters(user, k), 1):
            writer.writerow([user, nbr, rank, repr(est)])
            rows += 1
    return rows
