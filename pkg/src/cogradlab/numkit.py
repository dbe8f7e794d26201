"""Deterministic numeric kernels: vectors, matrices, seeded RNG, order statistics.

All vectors and matrices in this package are plain float64 numpy arrays
(1-D for vectors, 2-D row-major for per-example gradient stacks).  The
helpers here are thin, but they pin down the conventions the rest of the
code relies on: a single documented percentile rule, the sum-min-max
median-of-three identity, and one seedable generator (PCG64) used for
every random decision in the repo.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Rng", "as_vec", "as_mat", "dot", "percentile", "median3"]


def as_vec(x) -> np.ndarray:
    """Coerce to a 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    return v


def as_mat(x) -> np.ndarray:
    """Coerce to a 2-D float64 array (rows = examples)."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def dot(a, b) -> float:
    """Inner product of two equal-length vectors.

    Raises ValueError on length mismatch instead of broadcasting.
    """
    a, b = as_vec(a), as_vec(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.dot(a, b))


def percentile(values, p: float) -> float:
    """Linear-interpolation percentile of a non-empty sequence.

    Uses the inclusive closest-ranks rule (numpy's "linear" method), so
    percentile(v, 50) is the standard median, percentile(v, 0) the min,
    and percentile(v, 100) the max.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("percentile of empty sequence")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile rank out of [0, 100]: {p}")
    return float(np.percentile(v, p, method="linear"))


def median3(a, b, c) -> np.ndarray:
    """Coordinate-wise median of three equal-length vectors.

    Equivalent to the identity median(x1,x2,x3) = sum - min - max, but
    selects the middle element directly: the identity is exact only in
    real arithmetic (summing then subtracting can perturb the last ulp),
    while selection always returns one of the inputs bit-for-bit.
    """
    a, b, c = as_vec(a), as_vec(b), as_vec(c)
    if not (a.shape == b.shape == c.shape):
        raise ValueError("median3 requires three vectors of equal length")
    return np.median(np.stack([a, b, c]), axis=0)


class Rng:
    """Seedable random generator used everywhere in the repo.

    Backed by numpy's PCG64: a given 64-bit seed yields an identical
    stream on every platform.  Gaussian draws use numpy's ziggurat
    standard_normal.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def shuffle(self, n: int) -> np.ndarray:
        """A permutation of range(n)."""
        return self._gen.permutation(n)

    def choice(self, n: int, k: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=k, replace=replace)

    def spawn(self, key: int) -> "Rng":
        """A child generator whose stream is a pure function of (seed, key)."""
        return Rng((self.seed * 1_000_003 + key) % (2**63))
