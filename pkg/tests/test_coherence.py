import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cogradlab.coherence import (CoherenceStats, alpha, alpha_from_grads,
                                 batch_alpha_forward, commonality_alpha,
                                 cos_stiffness, diff_bound_check,
                                 gradient_diversity, gsnr, idealized_reduction,
                                 impute_alpha, pairwise_dot_expectation,
                                 sign_stiffness)
from cogradlab.datasets import dataset_L, dataset_M
from cogradlab.models import LinearModel, ParamSpace
from cogradlab.numkit import Rng

finite = st.floats(min_value=-100, max_value=100, allow_nan=False,
                   allow_infinity=False)


def stack(m, d):
    return arrays(np.float64, (m, d), elements=finite)


def L_grads(w=None):
    model = LinearModel(6)
    return model.per_example_grads(w if w is not None else np.zeros(6),
                                   dataset_L().train)


def M_grads():
    return LinearModel(6).per_example_grads(np.zeros(6), dataset_M().train)


class TestAlpha:
    def test_L_value_along_trajectory(self):
        w = np.zeros(6)
        model = LinearModel(6)
        for _ in range(50):
            rep = alpha_from_grads(L_grads(w))
            assert rep.alpha == pytest.approx(5 / 8, abs=1e-9)
            assert rep.alpha_hat == pytest.approx(2.5, abs=1e-9)
            w = w - 0.1 * model.per_example_grads(
                w, dataset_L().train).mean(axis=0)

    def test_identical_vectors(self):
        g = np.tile([1.0, -2.0, 3.0], (7, 1))
        assert alpha_from_grads(g).alpha == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_limit(self):
        rep = alpha_from_grads(np.eye(5) * 3.0)
        assert rep.alpha == pytest.approx(0.2, abs=1e-12)
        assert rep.alpha_hat == pytest.approx(1.0, abs=1e-12)
        assert rep.orthogonal_limit == 0.2

    def test_zero_sample_convention(self):
        rep = alpha_from_grads(np.zeros((4, 3)))
        assert rep.alpha == 0.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            alpha(CoherenceStats(0, np.zeros(2), 0.0))

    @given(stack(5, 8))
    @settings(max_examples=1000, deadline=None)
    def test_bounded(self, g):
        a = alpha_from_grads(g).alpha
        assert 0.0 <= a <= 1.0

    @given(stack(6, 5), st.floats(min_value=0.01, max_value=100))
    @settings(max_examples=1000, deadline=None)
    def test_scale_invariance(self, g, k):
        # stacks whose squared norm sits near the epsilon guard are
        # deliberately pulled toward the zero-sample convention, so scale
        # invariance is only claimed above that floor
        assume(float((g * g).sum()) > 1e-8)
        a1 = alpha_from_grads(g).alpha
        a2 = alpha_from_grads(k * g).alpha
        assert abs(a1 - a2) < 1e-10

    def test_unity_only_for_identical(self):
        rng = Rng(3)
        for _ in range(200):
            g = rng.normal((4, 6))
            a = alpha_from_grads(g).alpha
            identical = np.abs(g - g[0]).max() < 1e-12
            if a > 1 - 1e-12:
                assert identical


class TestMerge:
    def test_merge_matches_whole(self):
        rng = Rng(8)
        g = rng.normal((10, 4))
        whole = CoherenceStats.from_grads(g)
        parts = CoherenceStats.from_grads(g[:3]).merge(
            CoherenceStats.from_grads(g[3:]))
        assert parts.m == whole.m
        assert np.allclose(parts.sum_g, whole.sum_g)
        assert parts.sum_sq == pytest.approx(whole.sum_sq, rel=1e-12)

    def test_merge_associative_commutative(self):
        rng = Rng(9)
        a, b, c = (CoherenceStats.from_grads(rng.normal((3, 4)))
                   for _ in range(3))
        left = a.merge(b).merge(c)
        right = a.merge(c.merge(b))
        assert left.m == right.m
        assert np.allclose(left.sum_g, right.sum_g)
        assert left.sum_sq == pytest.approx(right.sum_sq, rel=1e-12)


class TestDecomposition:
    def test_identity_random_partitions(self):
        rng = Rng(17)
        for trial in range(300):
            d = int(rng.integers(4, 12))
            cut = int(rng.integers(1, d))
            space = ParamSpace(d, (("a", 0, cut), ("b", cut, d - cut)))
            g = rng.normal((5, d))
            rep = alpha_from_grads(g, space)
            total = sum(s.f * s.alpha for s in rep.per_segment)
            assert abs(total - rep.alpha) < 1e-10
            assert all(s.f >= 0 for s in rep.per_segment)
            assert sum(s.f for s in rep.per_segment) == pytest.approx(
                1.0, abs=1e-10)

    def test_zero_vector_scaling(self):
        rng = Rng(21)
        for trial in range(100):
            g = rng.normal((6, 5))
            base = alpha_from_grads(g).alpha
            n_zero = int(rng.integers(1, 7))
            padded = np.vstack([g, np.zeros((n_zero, 5))])
            p = 6 / (6 + n_zero)
            assert alpha_from_grads(padded).alpha == pytest.approx(
                p * base, abs=1e-12)

    def test_orthogonal_union_inequality(self):
        rng = Rng(23)
        for trial in range(100):
            # embed two stacks in disjoint coordinate blocks
            u = rng.normal((4, 3))
            v = rng.normal((8, 2))
            U = np.hstack([u, np.zeros((4, 2))])
            V = np.hstack([np.zeros((8, 3)), v])
            W = np.vstack([U, V])
            p = 4 / 12
            bound = (p * alpha_from_grads(u).alpha
                     + (1 - p) * alpha_from_grads(v).alpha)
            assert alpha_from_grads(W).alpha <= bound + 1e-12


class TestMiniBatchMap:
    def test_fixed_points(self):
        for k in (1, 2, 10, 100):
            assert batch_alpha_forward(0.0, k) == 0.0
            assert batch_alpha_forward(1.0, k) == 1.0

    def test_k1_identity(self):
        for a in (0.0, 0.3, 0.77, 1.0):
            assert batch_alpha_forward(a, 1) == a

    def test_plug_in_value(self):
        assert batch_alpha_forward(0.1, 4) == pytest.approx(0.4 / 1.3,
                                                            abs=1e-12)

    def test_forward_never_decreases(self):
        for a in np.linspace(0.001, 0.999, 50):
            assert batch_alpha_forward(float(a), 7) >= a

    @given(st.floats(0, 1), st.integers(1, 1000))
    @settings(max_examples=1000, deadline=None)
    def test_round_trip(self, a, k):
        w = batch_alpha_forward(a, k)
        back, clamped = impute_alpha(w, k)
        assert not clamped
        assert back == pytest.approx(a, abs=1e-9)

    def test_impute_extremes(self):
        assert impute_alpha(0.0, 5)[0] == 0.0
        assert impute_alpha(1.0, 5)[0] == 1.0

    def test_monte_carlo_batches(self):
        # synthetic gradients: shared component + independent noise; batch
        # coherence should match the closed-form map
        rng = Rng(5)
        m, d, k = 10_000, 20, 4
        common = rng.normal(d)
        g = common + 2.0 * rng.normal((m, d))
        a_v = alpha_from_grads(g).alpha
        batches = g.reshape(m // k, k, d).mean(axis=1)
        a_w = alpha_from_grads(batches).alpha
        assert a_w == pytest.approx(batch_alpha_forward(a_v, k), abs=0.01)


class TestEqOneAndTwo:
    def test_identical_rows(self):
        v = np.array([1.0, 2.0])
        g = np.tile(v, (5, 1))
        assert pairwise_dot_expectation(g) == pytest.approx(v @ v)

    def test_single_row(self):
        g = np.array([[3.0, 4.0]])
        assert pairwise_dot_expectation(g) == pytest.approx(25.0)

    def test_M_relation(self):
        g = M_grads()
        mean_sq = float((g * g).sum(axis=1).mean())
        assert pairwise_dot_expectation(g) == pytest.approx(mean_sq / 4)

    def test_idealized_reduction(self):
        g = np.tile([1.0, 0.0], (3, 1))
        assert idealized_reduction(g, 1.0) == -1.0
        assert idealized_reduction(np.zeros((3, 2)), 0.5) == 0.0

    def test_ratio_reproduces_alpha(self):
        g = L_grads()
        num = pairwise_dot_expectation(g)
        den = -idealized_reduction(g, 1.0)
        assert num / den == pytest.approx(alpha_from_grads(g).alpha,
                                          abs=1e-12)


class TestStiffness:
    def test_identical_rows(self):
        g = np.tile([1.0, 1.0], (4, 1))
        assert sign_stiffness(g) == 1.0
        assert cos_stiffness(g)[0] == pytest.approx(1.0)

    def test_antipodal(self):
        g = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert sign_stiffness(g) == -1.0
        assert cos_stiffness(g)[0] == pytest.approx(-1.0)

    def test_orthogonal_sample(self):
        g = M_grads()
        assert sign_stiffness(g) == 0.0
        assert cos_stiffness(g)[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_rows_excluded(self):
        g = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
        value, excluded = cos_stiffness(g)
        assert excluded == 1
        assert value == pytest.approx(1.0)

    def test_all_zero_errors(self):
        with pytest.raises(ValueError):
            cos_stiffness(np.zeros((3, 2)))


class TestGsnr:
    def test_constant_nonzero_coordinate(self):
        g = np.tile([2.0], (5, 1))
        assert gsnr(g)[0] == math.inf

    def test_zero_mean_coordinate(self):
        g = np.array([[1.0], [-1.0]])
        assert gsnr(g)[0] == 0.0

    def test_hand_value_two_pass_oracle(self):
        g = np.array([[2.0], [4.0]])
        vals = np.array([2.0, 4.0])
        mean = vals.sum() / 2
        var = ((vals - mean) ** 2).sum() / 2
        assert gsnr(g)[0] == pytest.approx(mean ** 2 / var)
        assert gsnr(g)[0] == pytest.approx(9.0)


class TestGradientDiversity:
    def test_identical_rows(self):
        assert gradient_diversity(np.tile([1.0, 2.0], (6, 1))) == \
            pytest.approx(1.0)

    def test_orthogonal_sample(self):
        assert gradient_diversity(np.eye(7)) == pytest.approx(7.0)

    def test_L_value(self):
        assert gradient_diversity(L_grads()) == pytest.approx(8 / 5,
                                                              abs=1e-9)

    def test_zero_alpha_errors(self):
        with pytest.raises(ValueError):
            gradient_diversity(np.zeros((3, 2)))


class TestDiffBound:
    def test_identical_rows(self):
        lhs, rhs = diff_bound_check(np.tile([1.0, 1.0], (4, 1)))
        assert lhs == pytest.approx(0.0, abs=1e-12)
        assert rhs == pytest.approx(0.0, abs=1e-9)

    def test_two_rows_enumeration(self):
        g = np.array([[1.0, 0.0], [0.0, 1.0]])
        # ordered pairs: (0,0),(0,1),(1,0),(1,1) -> distances 0,√2,√2,0
        lhs, rhs = diff_bound_check(g)
        assert lhs == pytest.approx(math.sqrt(2) / 2)
        assert rhs == pytest.approx(math.sqrt(2 * 0.5 * 1.0))
        assert lhs <= rhs + 1e-12

    @given(stack(8, 5))
    @settings(max_examples=1000, deadline=None)
    def test_inequality_holds(self, g):
        lhs, rhs = diff_bound_check(g)
        assert lhs <= rhs + 1e-9 + 1e-9 * rhs


class TestCommonality:
    def test_pure_common(self):
        assert commonality_alpha(5, 2.0, 0.0) == 1.0

    def test_pure_idiosyncratic(self):
        assert commonality_alpha(5, 0.0, 3.0) == pytest.approx(0.2)

    def test_half_split(self):
        assert commonality_alpha(4, 1.0, 1.0) == pytest.approx(5 / 8)

    def test_both_zero_errors(self):
        with pytest.raises(ValueError):
            commonality_alpha(4, 0.0, 0.0)

    def test_matches_constructed_stacks(self):
        rng = Rng(31)
        for trial in range(100):
            m = int(rng.integers(2, 8))
            c_norm = float(rng.uniform(0.1, 3.0))
            u_norm = float(rng.uniform(0.1, 3.0))
            d = m + 1
            # common component on the last axis, idiosyncratic on own axis
            g = np.zeros((m, d))
            g[:, d - 1] = c_norm
            for i in range(m):
                g[i, i] = u_norm
            expected = commonality_alpha(m, c_norm ** 2, u_norm ** 2)
            assert abs(alpha_from_grads(g).alpha - expected) < 1e-10
