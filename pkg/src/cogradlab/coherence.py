"""Gradient-alignment metrics.

The central quantity is alpha: the squared norm of the mean per-example
gradient divided by the mean squared gradient norm,

    alpha = (E[g] . E[g]) / (E[g . g] + eps),      eps = 1e-30,

which lies in [0, 1].  A sample of m pairwise-orthogonal equal-norm
gradients attains alpha = 1/m (the orthogonal limit), so alpha_hat = m *
alpha rescales the metric to "how many examples, including itself, each
example's gradient helps".  An all-zero sample reports alpha = 0.

``CoherenceStats`` carries the sufficient statistics (m, sum of gradients,
sum of squared norms, optional per-segment squared-norm splits) and merges
as an associative monoid, so alpha can be accumulated streaming without
materializing the gradient stack.  Per-segment alpha values satisfy the
exact decomposition alpha = sum_i f_i * alpha_i with weights f_i equal to
each segment's share of E[g . g].

Also here: the stylized mini-batching map between per-example and
mini-batch alpha (forward and inverse), pairwise comparison metrics
(stiffness, GSNR, gradient diversity), a pairwise-difference bound check,
and the common-plus-idiosyncratic closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numkit import as_mat

EPS = 1e-30


@dataclass(frozen=True)
class CoherenceStats:
    m: int
    sum_g: np.ndarray
    sum_sq: float
    segments: tuple = ()      # of (name, offset, length)
    seg_sum_sq: tuple = ()    # aligned with segments

    @staticmethod
    def from_grads(grads, param_space=None) -> "CoherenceStats":
        grads = as_mat(grads)
        sum_g = grads.sum(axis=0)
        sum_sq = float((grads * grads).sum())
        segments, segs = (), ()
        if param_space is not None:
            segments = tuple(param_space.segments)
            segs = tuple(float((grads[:, off:off + n] ** 2).sum())
                         for _, off, n in segments)
        return CoherenceStats(grads.shape[0], sum_g, sum_sq, segments, segs)

    def merge(self, other: "CoherenceStats") -> "CoherenceStats":
        if self.segments != other.segments:
            raise ValueError("cannot merge stats with different segmentations")
        return CoherenceStats(
            self.m + other.m,
            self.sum_g + other.sum_g,
            self.sum_sq + other.sum_sq,
            self.segments,
            tuple(a + b for a, b in zip(self.seg_sum_sq, other.seg_sum_sq)),
        )


@dataclass(frozen=True)
class SegmentCoherence:
    name: str
    f: float          # segment share of E[g . g]
    alpha: float
    alpha_hat: float


@dataclass(frozen=True)
class CoherenceReport:
    m: int
    alpha: float
    alpha_hat: float
    orthogonal_limit: float
    per_segment: tuple = ()

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_hat": self.alpha_hat,
            "m": self.m,
            "orthogonal_limit": self.orthogonal_limit,
            "segments": [
                {"name": s.name, "f": s.f, "alpha": s.alpha,
                 "alpha_hat": s.alpha_hat}
                for s in self.per_segment
            ],
        }


def _alpha_from_sums(m, num, den):
    # num = |sum_g|^2 / m^2, den = sum_sq / m; zero sample -> 0 via eps
    # guard; num <= den holds in exact arithmetic but can break by an ulp,
    # so clamp to keep the [0, 1] invariant under rounding
    return min(num / (den + EPS), 1.0)


def alpha(stats: CoherenceStats) -> CoherenceReport:
    """Coherence report from sufficient statistics.

    When the stats carry per-segment sums, the report includes per-segment
    values obeying the exact decomposition identity
    alpha = sum_i f_i * alpha_i.
    """
    m = stats.m
    if m < 1:
        raise ValueError("alpha of an empty sample")
    mean_g = stats.sum_g / m
    a = _alpha_from_sums(m, float(mean_g @ mean_g), stats.sum_sq / m)
    segments = []
    for (name, off, n), seg_sq in zip(stats.segments, stats.seg_sum_sq):
        seg_mean = mean_g[off:off + n]
        f = seg_sq / (stats.sum_sq + EPS)
        a_i = _alpha_from_sums(m, float(seg_mean @ seg_mean), seg_sq / m)
        segments.append(SegmentCoherence(name, f, a_i, m * a_i))
    return CoherenceReport(m, a, m * a, 1.0 / m, tuple(segments))


def alpha_stream(stats_iter) -> CoherenceReport:
    """Fold a sequence of CoherenceStats and report alpha of the union."""
    it = iter(stats_iter)
    try:
        acc = next(it)
    except StopIteration:
        raise ValueError("alpha of an empty stream") from None
    for s in it:
        acc = acc.merge(s)
    return alpha(acc)


def alpha_from_grads(grads, param_space=None) -> CoherenceReport:
    return alpha(CoherenceStats.from_grads(grads, param_space))


def batch_alpha_forward(alpha_v: float, k: int) -> float:
    """Mini-batch alpha from per-example alpha for i.i.d. batches of size k:
    alpha_W = k * alpha_V / (1 + (k - 1) * alpha_V)."""
    if not 0.0 <= alpha_v <= 1.0:
        raise ValueError("alpha out of [0, 1]")
    if k < 1:
        raise ValueError("batch size must be >= 1")
    return k * alpha_v / (1.0 + (k - 1) * alpha_v)


def impute_alpha(alpha_w: float, k: int) -> tuple[float, bool]:
    """Invert the mini-batch map: alpha_V = alpha_W / (k - (k-1) * alpha_W).

    Returns (value clamped to [0, 1], clamped_flag).  A non-positive
    denominator saturates to 1 with the flag set.
    """
    if k < 1:
        raise ValueError("batch size must be >= 1")
    den = k - (k - 1) * alpha_w
    if den <= 0.0:
        return 1.0, True
    v = alpha_w / den
    clamped = not 0.0 <= v <= 1.0
    return min(max(v, 0.0), 1.0), clamped


def pairwise_dot_expectation(grads) -> float:
    """E[g] . E[g] — identically the expected dot product of two
    independently drawn per-example gradients."""
    grads = as_mat(grads)
    mean_g = grads.mean(axis=0)
    return float(mean_g @ mean_g)


def idealized_reduction(grads, eta: float) -> float:
    """-eta * E[g . g]: the per-example loss reduction a small step would
    achieve if every gradient pointed the same way."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    grads = as_mat(grads)
    return -eta * float((grads * grads).sum()) / grads.shape[0]


def sign_stiffness(grads) -> float:
    """Mean of sign(g_z . g_z') over ordered pairs z != z'; sign(0) = 0."""
    grads = as_mat(grads)
    m = grads.shape[0]
    if m < 2:
        raise ValueError("stiffness needs at least 2 rows")
    D = grads @ grads.T
    s = np.sign(D)
    np.fill_diagonal(s, 0.0)
    return float(s.sum()) / (m * (m - 1))


def cos_stiffness(grads) -> tuple[float, int]:
    """Mean cosine similarity over ordered pairs of nonzero rows.

    Returns (value, number of zero rows excluded).
    """
    grads = as_mat(grads)
    if grads.shape[0] < 2:
        raise ValueError("stiffness needs at least 2 rows")
    norms = np.linalg.norm(grads, axis=1)
    keep = norms > 0.0
    excluded = int((~keep).sum())
    G = grads[keep]
    m = G.shape[0]
    if m == 0:
        raise ValueError("all rows are zero")
    if m == 1:
        raise ValueError("fewer than 2 nonzero rows")
    U = G / norms[keep][:, None]
    C = U @ U.T
    np.fill_diagonal(C, 0.0)
    return float(C.sum()) / (m * (m - 1)), excluded


def gsnr(grads) -> np.ndarray:
    """Per-coordinate mean^2 / variance with population variance (divide by
    m).  Zero variance: 0 if the mean is also zero, +inf otherwise."""
    grads = as_mat(grads)
    m = grads.shape[0]
    if m < 2:
        raise ValueError("gsnr needs at least 2 rows")
    mean = grads.mean(axis=0)
    var = grads.var(axis=0)   # population form
    out = np.empty_like(mean)
    zero_var = var == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(zero_var,
                       np.where(mean == 0.0, 0.0, np.inf),
                       mean * mean / np.where(zero_var, 1.0, var))
    return out


def gradient_diversity(grads) -> float:
    """1 / alpha; errors on alpha = 0 (the ratio diverges)."""
    a = alpha_from_grads(grads).alpha
    if a == 0.0:
        raise ValueError("gradient diversity diverges at alpha = 0")
    return 1.0 / a


def diff_bound_check(grads) -> tuple[float, float]:
    """(lhs, rhs) where lhs is the mean pairwise gradient distance over all
    ordered pairs (including z = z') and rhs = sqrt(2 (1 - alpha) E[g.g]).

    lhs <= rhs holds in exact arithmetic for every sample; numerically it
    holds up to rounding at the sample's scale.  Distances are taken on
    explicit row differences (not the dot-product expansion) so identical
    rows give an exact zero.
    """
    grads = as_mat(grads)
    m = grads.shape[0]
    diffs = grads[:, None, :] - grads[None, :, :]
    lhs = float(np.sqrt((diffs * diffs).sum(axis=2)).sum()) / (m * m)
    rep = alpha_from_grads(grads)
    mean_sq = float((grads * grads).sum(axis=1).mean())
    rhs = math.sqrt(max(2.0 * (1.0 - rep.alpha) * mean_sq, 0.0))
    return lhs, rhs


def commonality_alpha(m: int, c_norm_sq: float, u_norm_sq: float) -> float:
    """alpha of a stack g_i = c + u_i with a shared component c and
    idiosyncratic mutually-orthogonal components u_i of equal norm,
    all orthogonal to c:

        alpha = (1/m) * (1 + (m - 1) * f),   f = |c|^2 / (|c|^2 + |u|^2).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if c_norm_sq < 0 or u_norm_sq < 0:
        raise ValueError("squared norms must be non-negative")
    total = c_norm_sq + u_norm_sq
    if total == 0.0:
        raise ValueError("degenerate all-zero construction")
    f = c_norm_sq / total
    return (1.0 + (m - 1) * f) / m
