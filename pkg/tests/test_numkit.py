import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cogradlab.numkit import Rng, dot, median3, percentile

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False,
                   allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


class TestDot:
    def test_hand_values(self):
        assert dot([1, 0, 0, 0, 0, 1], [0, -1, 0, 0, 0, -1]) == -1.0
        assert dot([0.0, 0.0], [0.0, 0.0]) == 0.0
        assert dot([1, 2], [3, 4]) == 11.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dot([1.0], [1.0, 2.0])

    @given(vec(7), vec(7))
    @settings(max_examples=200)
    def test_symmetry(self, a, b):
        assert dot(a, b) == dot(b, a)

    @given(vec(5), vec(5), vec(5), finite)
    @settings(max_examples=200)
    def test_bilinearity(self, a, b, c, k):
        lhs = dot(a, k * b + c)
        rhs = k * dot(a, b) + dot(a, c)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)


class TestPercentile:
    def test_median_of_mostly_zero(self):
        # median of one nonzero value among four is 0
        for r in (0.5, 1.0, 7.0):
            assert percentile([r, 0, 0, 0], 50) == 0.0

    def test_singleton(self):
        assert percentile([5], 50) == 5.0

    def test_even_interpolation(self):
        # oracle: sort [1,2,3,4], rank p=50 falls between 2 and 3
        assert percentile([1, 2, 3, 4], 50) == 2.5

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            percentile([], 50)

    @given(st.lists(finite, min_size=1, max_size=30),
           st.floats(0, 100), st.floats(0, 100))
    @settings(max_examples=300)
    def test_monotone_in_p(self, values, p1, p2):
        lo, hi = sorted((p1, p2))
        assert percentile(values, lo) <= percentile(values, hi) + 1e-12

    @given(st.lists(finite, min_size=1, max_size=30))
    @settings(max_examples=200)
    def test_extremes(self, values):
        assert percentile(values, 0) == min(values)
        assert percentile(values, 100) == max(values)


class TestMedian3:
    def test_enumeration_oracle(self):
        out = median3([1, 0], [0, 1], [0, 0])
        assert out.tolist() == [0, 0]

    def test_all_equal(self):
        v = np.array([3.0, -2.0, 0.5])
        assert median3(v, v, v).tolist() == v.tolist()

    def test_scalar(self):
        assert median3([1.0], [2.0], [3.0]).tolist() == [2.0]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            median3([1.0], [1.0, 2.0], [1.0])

    @given(vec(6), vec(6), vec(6))
    @settings(max_examples=500)
    def test_matches_sort_oracle(self, a, b, c):
        expected = np.sort(np.stack([a, b, c]), axis=0)[1]
        assert median3(a, b, c).tolist() == expected.tolist()


class TestRng:
    def test_reproducible_streams(self):
        a, b = Rng(1234), Rng(1234)
        assert a.uniform(size=10_000).tolist() == b.uniform(size=10_000).tolist()
        assert a.normal(10_000).tolist() == b.normal(10_000).tolist()

    def test_different_seeds_differ(self):
        assert Rng(1).uniform(size=16).tolist() != Rng(2).uniform(size=16).tolist()

    def test_shuffle_is_permutation(self):
        p = Rng(7).shuffle(100)
        assert sorted(p.tolist()) == list(range(100))
