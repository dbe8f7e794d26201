"""Gradient-combination rules applied to a stack of per-example (or
per-micro-batch) gradients before the parameter update.

* mean               — plain column means.
* winsorized(c)      — clip each coordinate to its [c, 100-c] percentile
                       range across the stack, then average.  c = 0 is the
                       mean; c = 50 is the coordinate-wise median.
* median_of_means(k) — split rows into k contiguous groups in row order,
                       average each group, take the coordinate-wise median
                       of the group means.
* m3                 — coordinate-wise median of exactly 3 micro-batch
                       means, via the sum - min - max identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import as_mat, median3


@dataclass(frozen=True)
class Aggregator:
    kind: str                     # mean | winsorized | median_of_means | m3
    c: float = 0.0                # winsorized percentile, in [0, 50]
    k_groups: int = 1             # median_of_means group count

    def __post_init__(self):
        if self.kind not in ("mean", "winsorized", "median_of_means", "m3"):
            raise ValueError(f"unknown aggregator kind: {self.kind}")
        if self.kind == "winsorized" and not 0.0 <= self.c <= 50.0:
            raise ValueError("winsorization percentile out of [0, 50]")
        if self.kind == "median_of_means" and self.k_groups < 1:
            raise ValueError("median_of_means needs k_groups >= 1")

    @property
    def micro_batches(self) -> int:
        """Micro-batch means consumed per parameter update."""
        return 3 if self.kind == "m3" else 1


def winsorized_mean(grads: np.ndarray, c: float) -> np.ndarray:
    """Per coordinate: clip to [percentile(c), percentile(100-c)], average."""
    if c == 0.0:
        return grads.mean(axis=0)
    lo = np.percentile(grads, c, axis=0, method="linear")
    hi = np.percentile(grads, 100.0 - c, axis=0, method="linear")
    return np.clip(grads, lo, hi).mean(axis=0)


def median_of_means(grads: np.ndarray, k: int) -> np.ndarray:
    """Contiguous grouping in row order; callers wanting random groups
    shuffle rows first."""
    m = grads.shape[0]
    if k > m:
        raise ValueError("more groups than rows")
    bounds = np.linspace(0, m, k + 1).astype(int)
    means = np.stack([grads[bounds[i]:bounds[i + 1]].mean(axis=0)
                      for i in range(k)])
    return np.median(means, axis=0)


def aggregate(agg: Aggregator, grads) -> np.ndarray:
    grads = as_mat(grads)
    if grads.shape[0] == 0:
        raise ValueError("empty gradient stack")
    if agg.kind == "mean":
        return grads.mean(axis=0)
    if agg.kind == "winsorized":
        return winsorized_mean(grads, agg.c)
    if agg.kind == "median_of_means":
        return median_of_means(grads, agg.k_groups)
    # m3: rows are the 3 micro-batch means
    if grads.shape[0] != 3:
        raise ValueError("m3 requires exactly 3 micro-batch means")
    return median3(grads[0], grads[1], grads[2])


class M3Stream:
    """Serial micro-batch combinator: buffer two means, emit the
    coordinate-wise median when the third arrives, then reset."""

    def __init__(self):
        self._buf = []

    def push(self, micro_mean: np.ndarray):
        """Returns the median update on every third call, else None."""
        self._buf.append(np.asarray(micro_mean, dtype=np.float64))
        if len(self._buf) < 3:
            return None
        out = median3(*self._buf)
        self._buf.clear()
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)
