import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cogradlab.aggregators import (Aggregator, M3Stream, aggregate,
                                   median_of_means, winsorized_mean)
from cogradlab.datasets import dataset_L, dataset_M
from cogradlab.models import LinearModel
from cogradlab.numkit import Rng

finite = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False,
                   allow_infinity=False)


def stack(m, d):
    return arrays(np.float64, (m, d), elements=finite)


class TestWinsorized:
    def test_c0_is_mean(self):
        rng = Rng(1)
        g = rng.normal((9, 4))
        out = aggregate(Aggregator("winsorized", c=0.0), g)
        assert np.allclose(out, g.mean(axis=0))

    def test_c50_on_common_direction_table(self):
        g = LinearModel(6).per_example_grads(np.zeros(6), dataset_L().train)
        out = aggregate(Aggregator("winsorized", c=50.0), g)
        assert np.allclose(out[:5], 0.0)
        assert out[5] != 0.0

    def test_c50_on_orthogonal_table(self):
        g = LinearModel(6).per_example_grads(np.zeros(6), dataset_M().train)
        out = aggregate(Aggregator("winsorized", c=50.0), g)
        assert np.allclose(out, 0.0)

    @given(stack(7, 3))
    @settings(max_examples=300, deadline=None)
    def test_c50_equals_coordinate_median(self, g):
        out = winsorized_mean(g, 50.0)
        assert np.allclose(out, np.median(g, axis=0), atol=1e-9)

    @given(stack(8, 3), st.floats(0, 50), st.floats(0, 50))
    @settings(max_examples=300, deadline=None)
    def test_clip_interval_nested_in_c(self, g, c1, c2):
        # the clipping interval tightens toward the median as c grows, so
        # the output always stays within the looser interval
        lo, hi = sorted((c1, c2))
        l_lo = np.percentile(g, lo, axis=0)
        u_lo = np.percentile(g, 100 - lo, axis=0)
        out_hi = winsorized_mean(g, hi)
        assert np.all(out_hi >= l_lo - 1e-9)
        assert np.all(out_hi <= u_lo + 1e-9)

    @given(stack(6, 4), st.floats(0, 50))
    @settings(max_examples=300, deadline=None)
    def test_never_extrapolates(self, g, c):
        out = winsorized_mean(g, c)
        assert np.all(out <= g.max(axis=0) + 1e-12)
        assert np.all(out >= g.min(axis=0) - 1e-12)

    @given(stack(6, 4), st.floats(0, 50))
    @settings(max_examples=200, deadline=None)
    def test_row_permutation_invariant(self, g, c):
        perm = Rng(4).shuffle(g.shape[0])
        a = winsorized_mean(g, c)
        b = winsorized_mean(g[perm], c)
        assert np.allclose(a, b, atol=1e-12)

    def test_c_out_of_range(self):
        with pytest.raises(ValueError):
            Aggregator("winsorized", c=60.0)


class TestMedianOfMeans:
    def test_single_group_is_mean(self):
        rng = Rng(6)
        g = rng.normal((8, 3))
        out = aggregate(Aggregator("median_of_means", k_groups=1), g)
        assert np.allclose(out, g.mean(axis=0))

    def test_contiguous_grouping(self):
        g = np.array([[0.0], [0.0], [10.0], [10.0], [100.0], [100.0]])
        out = median_of_means(g, 3)
        # group means 0, 10, 100 -> median 10
        assert out[0] == 10.0

    def test_outlier_robustness(self):
        g = np.vstack([np.ones((8, 2)), [[1e9, 1e9]]])
        out = median_of_means(g, 3)
        assert np.all(out < 10.0)

    def test_too_many_groups(self):
        with pytest.raises(ValueError):
            median_of_means(np.ones((2, 2)), 3)


class TestM3:
    def test_exact_three_rows(self):
        with pytest.raises(ValueError):
            aggregate(Aggregator("m3"), np.ones((2, 3)))

    def test_batch_value(self):
        out = aggregate(Aggregator("m3"),
                        np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))
        assert out.tolist() == [0.0, 0.0]

    def test_micro_batch_1_suppresses_idiosyncratic(self):
        model = LinearModel(6)
        for data in (dataset_L(), dataset_M()):
            g = model.per_example_grads(np.zeros(6), data.train)
            out = aggregate(Aggregator("m3"), g[:3])
            assert np.allclose(out[:5], 0.0)

    def test_stream_buffers_two(self):
        s = M3Stream()
        assert s.push(np.array([1.0, 0.0])) is None
        assert s.push(np.array([0.0, 1.0])) is None
        out = s.push(np.array([0.0, 0.0]))
        assert out.tolist() == [0.0, 0.0]
        assert s.pending == 0

    def test_stream_equal_vectors(self):
        s = M3Stream()
        v = np.array([2.0, -3.0])
        s.push(v)
        s.push(v)
        assert s.push(v).tolist() == v.tolist()

    @given(stack(3, 5))
    @settings(max_examples=300, deadline=None)
    def test_stream_equals_batch(self, g):
        s = M3Stream()
        s.push(g[0])
        s.push(g[1])
        out = s.push(g[2])
        assert out.tolist() == aggregate(Aggregator("m3"), g).tolist()


class TestAggregateGeneral:
    def test_empty_stack_errors(self):
        with pytest.raises(ValueError):
            aggregate(Aggregator("mean"), np.zeros((0, 3)))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Aggregator("trimmed")

    @given(stack(5, 3))
    @settings(max_examples=200, deadline=None)
    def test_mean_permutation_invariant(self, g):
        perm = Rng(11).shuffle(5)
        a = aggregate(Aggregator("mean"), g)
        b = aggregate(Aggregator("mean"), g[perm])
        assert np.allclose(a, b, atol=1e-12)
