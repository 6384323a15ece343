import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vecsum import (
    Coreset,
    CoresetParams,
    EmptyStream,
    InvalidConfig,
    SparseVector,
    StreamState,
    estimate_mean,
    merge,
    new_stream,
)
from vecsum.bench import brute_force_mean, brute_force_variance, gen_gaussian
from vecsum.stream import finalize, insert, memory_bound


def singleton(values, mass, ident=0):
    return Coreset([SparseVector.from_dense(values)], np.array([ident]), np.ones(1), int(mass), float(mass))


def points(n, d=3, seed=0):
    return gen_gaussian(n, d, seed).points


class TestNewStream:
    def test_minimum_leaf(self):
        s = new_stream(CoresetParams(10), 22)
        assert s.total_count == 0 and s.levels == {} and s.leaf_buffer == []

    def test_leaf_too_small(self):
        with pytest.raises(InvalidConfig):
            new_stream(CoresetParams(10), 10)

    def test_large_leaf(self):
        assert new_stream(CoresetParams(100), 4096).leaf_size == 4096


class TestInsert:
    def test_no_flush_before_full_leaf(self):
        s = new_stream(CoresetParams(10), 22)
        for p in points(21):
            insert(s, p)
        assert s.levels == {} and len(s.leaf_buffer) == 21

    def test_single_flush(self):
        s = new_stream(CoresetParams(10), 22).extend(points(22))
        assert s.occupied_levels() == [1]
        assert s.levels[1].represented_count == 22
        assert s.leaf_buffer == []
        assert len(s.levels[1]) <= 11

    def test_binary_carry(self):
        s = new_stream(CoresetParams(10), 22).extend(points(4 * 22))
        assert s.occupied_levels() == [3]
        assert s.levels[3].represented_count == 88
        assert s.max_level == 3

    @settings(max_examples=30)
    @given(st.integers(1, 600))
    def test_carry_bits(self, n):
        s = new_stream(CoresetParams(3), 8).extend(points(n, 2, seed=n))
        q = n // 8
        assert len(s.occupied_levels()) == bin(q).count("1")
        assert s.occupied_levels() == [i + 1 for i in range(q.bit_length()) if q >> i & 1]
        assert sum(c.represented_count for c in s.levels.values()) + len(s.leaf_buffer) == n
        assert s.stored_points <= 8 + (s.max_level + 1) * 4


class TestMerge:
    def test_zero_mass_side_is_identity(self):
        c = singleton([1.0, 2.0], 3)
        empty = Coreset([SparseVector.from_dense([9.0])], np.array([1]), np.ones(1), 0, 0.0)
        m = merge(c, empty)
        assert m.points == c.points
        np.testing.assert_array_equal(m.u, [1.0])

    def test_equal_masses(self):
        m = merge(singleton([1.0], 1), singleton([3.0], 1, 1))
        np.testing.assert_allclose(m.u, [0.5, 0.5])

    def test_unequal_masses(self):
        m = merge(singleton([1.0], 3), singleton([3.0], 1, 1))
        np.testing.assert_allclose(m.u, [0.75, 0.25])
        assert m.mass == 4.0 and m.count == 4
        np.testing.assert_array_equal(m.ids, [0, 1])


class TestFinalize:
    def test_single_point(self):
        p = SparseVector.from_dense([1.0, -1.0])
        c = finalize(new_stream(CoresetParams(2), 6).extend([p]))
        assert c.points == [p] and c.weights.tolist() == [1.0]

    def test_empty(self):
        with pytest.raises(EmptyStream):
            finalize(new_stream(CoresetParams(2), 6))

    def test_buffer_only_is_exact(self):
        P = gen_gaussian(50, 4, 1)
        s = new_stream(CoresetParams(30), 62).extend(P.points)
        np.testing.assert_allclose(estimate_mean(s.finalize()), brute_force_mean(P), rtol=1e-12)

    def test_is_a_read(self):
        s = new_stream(CoresetParams(4), 10).extend(points(57))
        before = (s.occupied_levels(), len(s.leaf_buffer), s.total_count)
        a, b = s.finalize(), s.finalize()
        assert before == (s.occupied_levels(), len(s.leaf_buffer), s.total_count)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_union_not_recompressed(self):
        s = new_stream(CoresetParams(4), 10).extend(points(57))
        c = s.finalize()
        assert len(c) == s.stored_points
        assert c.represented_count == 57 and c.represented_weight == 57.0
        assert len(s.compact()) <= 5

    def test_source_indices_are_stream_ordinals(self):
        pts = points(123)
        c = new_stream(CoresetParams(4), 10).extend(pts).finalize()
        for p, i in zip(c.points, c.source_indices):
            assert p is pts[i]

    def test_mid_size_stream_error(self):
        P = gen_gaussian(20000, 50, 3)
        s = new_stream(CoresetParams(100), 256).extend(P.points)
        err = np.sum((s.estimate_mean() - brute_force_mean(P)) ** 2)
        assert err <= brute_force_variance(P) / 10
        assert s.peak_stored <= 256 + 20 * 101
        assert s.peak_stored <= memory_bound(20000, 256, 100)

    @settings(max_examples=25)
    @given(st.integers(1, 400), st.integers(1, 6))
    def test_conservation_and_memory(self, n, beta):
        leaf = 2 * (beta + 1)
        s = new_stream(CoresetParams(beta), leaf)
        for p in points(n, 2, seed=beta):
            s.insert(p)
            assert s.stored_points <= memory_bound(s.total_count, leaf, beta)
        c = s.finalize()
        assert c.represented_weight == n and c.represented_count == n


def test_memory_bound_formula():
    assert memory_bound(100, 256, 100) == 256
    assert memory_bound(256, 256, 100) == 256 + 101
    assert memory_bound(10**5, 256, 100) == 256 + (9 + 1) * 101
