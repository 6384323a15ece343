import io
import json
import math

import numpy as np
import pytest

from vecsum import CoresetParams, InvalidInput, LocationRecord, ProximityBook, UnknownUser, prox
from vecsum.proximity import distance, parse_edges, parse_records, read_records, write_heavy_hitters


class DenseOracle:
    """Exact n x n accumulation of every emitted proximity."""

    def __init__(self, n):
        self.S = np.zeros((n, n))
        self.counts = np.zeros(n, dtype=int)
        self.pos = np.full((n, 2), np.nan)

    def move(self, i, xy):
        self.pos[i] = xy
        for j in range(len(self.pos)):
            if j != i and not np.isnan(self.pos[j, 0]):
                v = math.exp(-math.dist(self.pos[i], self.pos[j]))
                self.S[i, j] += v
                self.S[j, i] += v
                self.counts[i] += 1
                self.counts[j] += 1

    def average(self, i):
        return self.S[i] / max(self.counts[i], 1)


def row_variance(updates, mean):
    """Variance of a row's 1-sparse update stream around its exact mean."""
    X = np.zeros((len(updates), mean.size))
    for k, (c, v) in enumerate(updates):
        X[k, c] = v
    np.testing.assert_allclose(X.mean(0), mean, atol=1e-12)
    return float(np.mean(np.sum((X - mean) ** 2, axis=1)))


class TestProx:
    def test_zero_distance(self):
        assert prox((1.0, 2.0), (1.0, 2.0)) == 1.0

    def test_ln2(self):
        assert prox((0.0, 0.0), (math.log(2), 0.0)) == pytest.approx(0.5, rel=1e-15)

    def test_monotone_decay(self):
        vals = [prox((0, 0), (d, 0)) for d in np.linspace(0, 50, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-20

    def test_symmetric_and_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b = rng.uniform(-10, 10, 2), rng.uniform(-10, 10, 2)
            assert prox(a, b) == prox(b, a)
            assert 0 < prox(a, b) <= 1

    def test_haversine_one_degree(self):
        d = distance((0.0, 0.0), (0.0, 1.0), metric="haversine")
        assert d == pytest.approx(111.19, rel=1e-3)

    def test_unknown_metric(self):
        with pytest.raises(InvalidInput):
            distance((0, 0), (1, 1), metric="manhattan")

    def test_non_finite_record(self):
        with pytest.raises(InvalidInput):
            LocationRecord(0.0, "a", float("nan"), 0.0)


class TestIngest:
    def test_first_record(self):
        book = ProximityBook()
        assert book.ingest(LocationRecord(0, "a", 1.0, 1.0)) == []
        assert book.n == 1
        assert book.average_row("a").nnz == 0

    def test_identical_positions(self):
        book = ProximityBook()
        book.ingest(LocationRecord(0, "a", 3.0, 4.0))
        out = book.ingest(LocationRecord(1, "b", 3.0, 4.0))
        assert sorted(out) == [(0, 1, 1.0), (1, 0, 1.0)]
        assert book.average_row("a").pairs() == [(1, 1.0)]
        assert book.average_row("b").pairs() == [(0, 1.0)]

    def test_emission_symmetry(self):
        rng = np.random.default_rng(1)
        book = ProximityBook()
        for t in range(60):
            out = book.ingest(LocationRecord(t, f"u{rng.integers(8)}", *rng.uniform(0, 3, 2)))
            assert sorted(out) == sorted((j, i, v) for i, j, v in out)
            assert all(0 < v <= 1 for _, _, v in out)

    def test_three_users_scripted(self):
        script = [("a", 0, 0), ("b", 1, 0), ("c", 0, 1), ("a", 0.5, 0.5), ("b", 2, 2),
                  ("c", 1, 1), ("a", 1, 0), ("b", 0, 0), ("c", 3, 0), ("a", 0.2, 0.1)]
        beta = 2
        book = ProximityBook(CoresetParams(beta), leaf_size=6)
        oracle = DenseOracle(3)
        updates = {i: [] for i in range(3)}
        for t, (u, x, y) in enumerate(script):
            for r, c, v in book.ingest(LocationRecord(t, u, x, y)):
                updates[r].append((c, v))
            oracle.move(book.id_map[u], (x, y))
        for u in "abc":
            i = book.id_map[u]
            assert book.rows[i].total_count == oracle.counts[i] == len(updates[i])
            exact = oracle.average(i)
            assert np.all(exact[np.arange(3) != i] > 0) and np.all(exact <= 1)
            est = book.average_row(u).to_dense(3)
            assert np.sum((est - exact) ** 2) <= row_variance(updates[i], exact) * 4 / beta

    def test_random_walk_rows_against_dense_oracle(self):
        rng = np.random.default_rng(5)
        n, beta = 50, 32
        book = ProximityBook(CoresetParams(beta))
        oracle = DenseOracle(n)
        pos = rng.uniform(0, 6, (n, 2))
        updates = {i: [] for i in range(n)}
        for t in range(400):
            i = int(rng.integers(n))
            pos[i] += rng.normal(0, 0.3, 2)
            for r, c, v in book.ingest(LocationRecord(t, f"u{i:02d}", *pos[i])):
                updates[r].append((c, v))
            oracle.move(book.id_map[f"u{i:02d}"], pos[i])
        for u in book.users[:10]:
            i = book.id_map[u]
            exact = oracle.average(i)
            est = book.average_row(u).to_dense(n)
            assert np.sum((est - exact) ** 2) <= row_variance(updates[i], exact) * 4 / beta


class TestQueries:
    def test_two_users_ln2(self):
        book = ProximityBook()
        for t in range(20):
            book.ingest(LocationRecord(t, "a", 0.0, 0.0))
            book.ingest(LocationRecord(t, "b", math.log(2), 0.0))
        row = book.average_row("a")
        assert row.indices.tolist() == [1]
        assert row.values[0] == pytest.approx(0.5, rel=1e-12)
        (nbr, val), = book.heavy_hitters("a", 1)
        assert nbr == "b" and val == pytest.approx(0.5)

    def test_k_exceeds_row(self):
        book = ProximityBook()
        for t, (u, x) in enumerate([("a", 0.0), ("b", 1.0), ("c", 3.0)]):
            book.ingest(LocationRecord(t, u, x, 0.0))
        hh = book.heavy_hitters("a", 10)
        assert [u for u, _ in hh] == ["b", "c"]
        assert hh[0][1] > hh[1][1]

    def test_tie_break_by_index(self):
        book = ProximityBook()
        book.ingest(LocationRecord(0, "a", 0.0, 0.0))
        book.ingest(LocationRecord(1, "b", 1.0, 0.0))
        book.ingest(LocationRecord(2, "c", -1.0, 0.0))
        assert [u for u, _ in book.heavy_hitters("a", 2)] == ["b", "c"]

    def test_unknown_user(self):
        book = ProximityBook()
        with pytest.raises(UnknownUser):
            book.average_row("ghost")
        with pytest.raises(UnknownUser):
            book.heavy_hitters("ghost", 1)

    def test_bad_k(self):
        book = ProximityBook()
        book.ingest(LocationRecord(0, "a", 0.0, 0.0))
        with pytest.raises(InvalidInput):
            book.heavy_hitters("a", 0)

    def test_planted_cluster(self):
        rng = np.random.default_rng(3)
        book = ProximityBook(cutoff=1e-6)
        far = rng.uniform(0, 400, (45, 2))
        for t in range(30):
            centre = np.array([200.0, 200.0]) + rng.normal(0, 1, 2)
            for i in range(5):
                book.ingest(LocationRecord(t, f"c{i}", *(centre + rng.normal(0, 0.3, 2))))
            for i in range(45):
                book.ingest(LocationRecord(t, f"f{i}", *far[i]))
        for i in range(5):
            top = {u for u, _ in book.heavy_hitters(f"c{i}", 4)}
            assert top == {f"c{j}" for j in range(5) if j != i}

    def test_memory_subquadratic(self):
        rng = np.random.default_rng(4)
        n = 200
        book = ProximityBook(CoresetParams(2))
        for i, xy in enumerate(rng.uniform(0, 3, (n, 2))):
            book.ingest(LocationRecord(0, f"u{i}", *xy))
        assert sum(r.total_count for r in book.rows) == n * (n - 1)
        assert book.stored_scalars() < n * n / 4

    def test_cutoff_drops_small_values(self):
        book = ProximityBook(cutoff=1e-3)
        book.ingest(LocationRecord(0, "a", 0.0, 0.0))
        assert book.ingest(LocationRecord(1, "b", 100.0, 0.0)) == []


class TestEdges:
    def test_rows_and_degrees(self):
        book = ProximityBook()
        for a, b, w in parse_edges(io.StringIO("# graph\na b\nb c 2.5\na c\n\n")):
            book.ingest_edge(a, b, w)
        assert book.users == ["a", "b", "c"]
        deg = dict(zip(book.degree_estimate().indices.tolist(), book.degree_estimate().values.tolist()))
        assert deg == pytest.approx({0: 2.0, 1: 3.5, 2: 3.5})
        row = book.row_sum("b")
        assert dict(zip(row.indices.tolist(), row.values.tolist())) == pytest.approx({0: 1.0, 2: 2.5})

    def test_bad_edge_line(self):
        with pytest.raises(InvalidInput):
            list(parse_edges(["a b c d"]))
        with pytest.raises(InvalidInput):
            list(parse_edges(["a b heavy"]))


class TestParsing:
    def test_jsonl_and_csv(self, tmp_path):
        lines = [json.dumps({"t": 0, "id": "x", "lon": 1.5, "lat": -2}), "t,id,lon,lat", "1,y,3,4", "# c", ""]
        recs = list(parse_records(lines))
        assert recs == [LocationRecord(0.0, "x", 1.5, -2.0), LocationRecord(1.0, "y", 3.0, 4.0)]
        path = tmp_path / "r.csv"
        path.write_text("t,id,lon,lat\n0,a,0,0\n1,b,1,1\n")
        assert len(read_records(path)) == 2

    def test_bad_record(self):
        with pytest.raises(InvalidInput):
            list(parse_records(['{"t": 0, "id": "x", "lon": 1}']))
        with pytest.raises(InvalidInput):
            list(parse_records(["0,x,abc,1"]))

    def test_heavy_hitter_csv(self):
        book = ProximityBook()
        book.ingest(LocationRecord(0, "a", 0.0, 0.0))
        book.ingest(LocationRecord(1, "b", math.log(2), 0.0))
        out = io.StringIO()
        assert write_heavy_hitters(book, out, 3) == 2
        lines = out.getvalue().splitlines()
        assert lines[0] == "user,neighbor,rank,estimate"
        assert lines[1].startswith("a,b,1,0.5")
