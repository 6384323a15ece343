"""Seeded data generators, brute-force oracles and the error-vs-budget harness."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields, astuple
from typing import IO, Optional, Sequence

import numpy as np
from scipy import sparse

from .coreset import Coreset, CoresetParams, Degenerate, SelectionRule, coreset, embed, estimate_mean
from .exceptions import InvalidConfig
from .proximity import ProximityBook, read_edges, read_records
from .sketches import CountSketch, SignSplitCountMin
from .stream import StreamState
from .vector import SparseVector, WeightedPointSet

METHODS = ("coreset", "uniform-sample", "count-min", "count-sketch")
GENERATORS = ("gaussian", "identity-rows", "gps-file", "edge-file")
CSV_HEADER = ["method", "n", "d", "beta", "seed", "error", "sq_error_over_var", "runtime_ms", "stored_scalars"]
SKETCH_DEPTH = 5


def gen_gaussian(n: int, d: int, seed: int, nnz: Optional[int] = None) -> WeightedPointSet:
    """``n`` i.i.d. standard normal vectors in ``R^d`` with uniform weights.

    With ``nnz`` set, each vector instead has ``nnz`` uniformly chosen
    coordinates carrying standard normal values.
    """
    if n < 1 or d < 1:
        raise InvalidConfig("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    if nnz is None or nnz >= d:
        X = rng.standard_normal((n, d))
        pts = [SparseVector.from_dense(row) for row in X]
    else:
        if nnz < 1:
            raise InvalidConfig("nnz must be >= 1")
        pts = []
        for _ in range(n):
            idx = np.sort(rng.choice(d, size=nnz, replace=False))
            pts.append(SparseVector.from_arrays(idx, rng.standard_normal(nnz)))
    return WeightedPointSet.uniform(pts)


def gen_identity_rows(n: int) -> WeightedPointSet:
    return WeightedPointSet.uniform(
        [SparseVector(np.array([i], dtype=np.int64), np.array([1.0])) for i in range(n)]
    )


def gen_gps_stream(path, *, scale: float = 1.0, metric: str = "planar") -> WeightedPointSet:
    """Global stream of 1-sparse proximity vectors emitted while replaying a GPS file.

    Every emitted update ``(row, col, value)`` contributes ``value * e_col``;
    the stream sum is the total proximity accumulated by each user.
    """
    book = ProximityBook(scale=scale, metric=metric)
    pts = []
    for rec in read_records(path):
        i, others, values = book.move(rec)
        for j, val in zip(others.tolist(), values.tolist()):
            pts.append(SparseVector(np.array([j], dtype=np.int64), np.array([val])))
            pts.append(SparseVector(np.array([i], dtype=np.int64), np.array([val])))
    if not pts:
        raise InvalidConfig(f"{path}: no proximity updates (need at least two users)")
    return WeightedPointSet.uniform(pts)


def gen_edge_stream(path) -> WeightedPointSet:
    """Global degree stream: edge ``(a, b, w)`` contributes ``w * e_a`` and ``w * e_b``."""
    ids: dict[str, int] = {}
    pts = []
    for a, b, w in read_edges(path):
        for node in (a, b):
            idx = ids.setdefault(node, len(ids))
            if w != 0:
                pts.append(SparseVector(np.array([idx], dtype=np.int64), np.array([w])))
    if not pts:
        raise InvalidConfig(f"{path}: no edges")
    return WeightedPointSet.uniform(pts)


def _csr(P: WeightedPointSet) -> sparse.csr_matrix:
    sizes = [p.indices.size for p in P.points]
    indptr = np.concatenate([[0], np.cumsum(sizes)])
    if indptr[-1] == 0:
        return sparse.csr_matrix((len(P), 0))
    indices = np.concatenate([p.indices for p in P.points])
    data = np.concatenate([p.values for p in P.points])
    d = int(indices.max()) + 1
    return sparse.csr_matrix((data, indices, indptr), shape=(len(P), d))


def brute_force_mean(P: WeightedPointSet) -> np.ndarray:
    """Exactly rounded weighted mean, one ``math.fsum`` per coordinate."""
    A = _csr(P).tocsc()
    out = np.zeros(A.shape[1])
    for j in range(A.shape[1]):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        if hi > lo:
            out[j] = math.fsum(P.u[A.indices[lo:hi]] * A.data[lo:hi])
    return out


def brute_force_variance(P: WeightedPointSet, mean: Optional[np.ndarray] = None) -> float:
    mean = brute_force_mean(P) if mean is None else mean
    A = _csr(P).toarray()
    d = max(A.shape[1], mean.size)
    A = np.pad(A, ((0, 0), (0, d - A.shape[1])))
    m = np.pad(mean, (0, d - mean.size))
    sq = ((A - m) ** 2).sum(axis=1)
    return math.fsum(P.u * sq)


def l2_error(exact: np.ndarray, estimate: np.ndarray) -> float:
    d = max(exact.size, estimate.size)
    diff = np.zeros(d)
    diff[: exact.size] += exact
    diff[: estimate.size] -= estimate
    return float(np.sqrt(diff @ diff))


@dataclass
class ExperimentConfig:
    generator: str = "gaussian"
    n: int = 1000
    d: int = 20
    nnz: Optional[int] = None
    path: Optional[str] = None
    betas: Sequence[int] = (100, 200, 300, 400, 500, 600, 900)
    seeds: Sequence[int] = (0,)
    methods: Sequence[str] = ("coreset",)
    leaf_size: Optional[int] = None
    rule: str = "linear"
    alpha: float = 4.0
    timing: bool = True

    def __post_init__(self):
        self.betas = [int(b) for b in self.betas]
        self.seeds = [int(s) for s in self.seeds]
        self.methods = list(self.methods)
        if not self.betas:
            raise InvalidConfig("betas must not be empty")
        if not self.seeds:
            raise InvalidConfig("seeds must not be empty")
        if any(b < 1 for b in self.betas):
            raise InvalidConfig("every beta must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise InvalidConfig(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.generator not in GENERATORS:
            raise InvalidConfig(f"unknown generator {self.generator!r}")
        if self.generator in ("gps-file", "edge-file") and not self.path:
            raise InvalidConfig(f"generator {self.generator} needs a path")
        SelectionRule.parse(self.rule)
        if self.leaf_size is not None:
            for b in self.betas:
                if self.leaf_size < 2 * (b + 1):
                    raise InvalidConfig(f"leaf_size {self.leaf_size} < 2*(beta+1) for beta={b}")

    def generate(self, seed: int) -> WeightedPointSet:
        if self.generator == "gaussian":
            return gen_gaussian(self.n, self.d, seed, self.nnz)
        if self.generator == "identity-rows":
            return gen_identity_rows(self.n)
        if self.generator == "gps-file":
            return gen_gps_stream(self.path)
        return gen_edge_stream(self.path)


@dataclass(order=True)
class ResultRow:
    method: str
    n: int
    d: int
    beta: int
    seed: int
    error: float
    sq_error_over_var: float
    runtime_ms: float = field(compare=False)
    stored_scalars: int = field(compare=False)

    def as_csv(self) -> list[str]:
        return [repr(v) if isinstance(v, float) else str(v) for v in astuple(self)]


def _uniform_sample_mean(P: WeightedPointSet, k: int, rng) -> tuple[np.ndarray, int]:
    k = min(k, len(P))
    pick = rng.choice(len(P), size=k, replace=False)
    w = P.u[pick]
    sub = WeightedPointSet.from_weights([P.points[i] for i in pick], w if w.sum() > 0 else None)
    return estimate_mean(Coreset.from_point_set(sub)), sum(P.points[i].nnz for i in pick) + 2 * k


def _weighted_updates(P: WeightedPointSet) -> tuple[np.ndarray, np.ndarray]:
    """The stream as ``(index, u_i * value)`` pairs, summed per index.

    Sketches are linear, so feeding the per-index totals builds the same
    table as feeding every update; doing it once per seed saves the
    re-aggregation for every budget.
    """
    A = _csr(P)
    totals = np.asarray(A.T @ P.u).ravel()
    idx = np.unique(A.indices)
    return idx, totals[idx]


def _sketch_mean(sk, updates: tuple[np.ndarray, np.ndarray], columns: np.ndarray) -> np.ndarray:
    sk.update_many(*updates)
    est = np.zeros(int(columns.max()) + 1 if columns.size else 0)
    est[columns] = sk.query_many(columns)
    return est


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """One row per (method, beta, seed); rows come back sorted."""
    rows: list[ResultRow] = []
    for seed in cfg.seeds:
        P = cfg.generate(seed)
        exact = brute_force_mean(P)
        var = brute_force_variance(P, exact)
        n, d = len(P), exact.size
        columns = np.unique(np.concatenate([p.indices for p in P.points]))
        emb = None
        if "coreset" in cfg.methods and cfg.leaf_size is None:
            emb = embed(P)
        updates, agg_ms = None, 0.0
        if {"count-min", "count-sketch"} & set(cfg.methods):
            t0 = time.perf_counter()
            updates = _weighted_updates(P)
            agg_ms = (time.perf_counter() - t0) * 1e3

        def row(method, beta, est, t0, stored, extra_ms=0.0):
            err = l2_error(exact, est)
            ratio = err * err / var if var > 0 else (0.0 if err == 0 else math.inf)
            ms = (time.perf_counter() - t0) * 1e3 + extra_ms if cfg.timing else 0.0
            rows.append(ResultRow(method, n, d, beta, seed, err, ratio, round(ms, 3), int(stored)))

        for beta in cfg.betas:
            params = CoresetParams(beta, alpha=cfg.alpha, rule=cfg.rule)
            avg_nnz = sum(p.nnz for p in P.points) / n
            budget = int(round((beta + 1) * (avg_nnz + 2)))
            k = beta + 1
            if "coreset" in cfg.methods:
                t0 = time.perf_counter()
                if cfg.leaf_size is None:
                    C = coreset(P, params, embedding=None if isinstance(emb, Degenerate) else emb)
                else:
                    if not np.allclose(P.u, P.u[0]):
                        raise InvalidConfig("streaming mode needs uniformly weighted data")
                    C = StreamState(params, cfg.leaf_size).extend(P.points).finalize()
                row("coreset", beta, estimate_mean(C), t0, C.stored_scalars())
                budget, k = C.stored_scalars(), len(C)
            if "uniform-sample" in cfg.methods:
                t0 = time.perf_counter()
                rng = np.random.default_rng([seed, beta])
                est, stored = _uniform_sample_mean(P, k, rng)
                row("uniform-sample", beta, est, t0, stored)
            sketch_seed = int(np.random.default_rng([seed, beta, 7]).integers(2**62))
            if "count-min" in cfg.methods:
                t0 = time.perf_counter()
                sk = SignSplitCountMin.with_budget(budget, SKETCH_DEPTH, sketch_seed)
                row("count-min", beta, _sketch_mean(sk, updates, columns), t0, sk.cells, agg_ms)
            if "count-sketch" in cfg.methods:
                t0 = time.perf_counter()
                sk = CountSketch.with_budget(budget, SKETCH_DEPTH, sketch_seed)
                row("count-sketch", beta, _sketch_mean(sk, updates, columns), t0, sk.cells, agg_ms)
    order = {m: i for i, m in enumerate(METHODS)}
    rows.sort(key=lambda r: (order[r.method], r.beta, r.seed))
    return rows


def write_csv(rows: Sequence[ResultRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(r.as_csv())


assert [f.name for f in fields(ResultRow)] == CSV_HEADER
