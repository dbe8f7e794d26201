"""Synthetic dataset generators: two hand-built six-feature tables, Gaussian
cluster classification data, noise-injection operators, and an outlier
regression set.

Targets are always length-1 vectors for regression and one-hot vectors for
classification.  Every generator is a pure function of its arguments plus a
seed, so identical calls produce identical datasets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .numkit import Rng

PRISTINE = "pristine"
CORRUPT = "corrupt"
NO_TAG = "none"


@dataclass(frozen=True)
class Example:
    x: np.ndarray
    y: np.ndarray
    tag: str = NO_TAG

    @property
    def y_scalar(self) -> float:
        return float(self.y[0])

    @property
    def label(self) -> int:
        """Class index for one-hot targets."""
        return int(np.argmax(self.y))


@dataclass(frozen=True)
class Dataset:
    train: tuple
    test: tuple
    meta: dict = field(default_factory=dict)

    @property
    def dims(self) -> int:
        pool = self.train or self.test
        return len(pool[0].x) if pool else 0

    @property
    def n_classes(self) -> int:
        """Number of classes, 0 for regression data."""
        if self.meta.get("task") == "classification":
            pool = self.train or self.test
            return len(pool[0].y)
        return 0

    def tagged(self, tag: str) -> tuple:
        return tuple(z for z in self.train if z.tag == tag)


def _ex(x, y, tag=NO_TAG) -> Example:
    return Example(np.asarray(x, dtype=np.float64),
                   np.asarray(y, dtype=np.float64), tag)


def dataset_L() -> Dataset:
    """Six-feature regression table whose last feature carries the label.

    Four training rows plus one held-out row.  Each training input lights up
    one idiosyncratic coordinate and the shared sixth coordinate, so the
    sixth is the only direction all training gradients agree on.
    """
    train = (
        _ex([1, 0, 0, 0, 0, 1], [1.0]),
        _ex([0, -1, 0, 0, 0, -1], [-1.0]),
        _ex([0, 0, -1, 0, 0, -1], [-1.0]),
        _ex([0, 0, 0, 1, 0, 1], [1.0]),
    )
    test = (_ex([0, 0, 0, 0, -1, -1], [-1.0]),)
    return Dataset(train, test, {"name": "L", "task": "regression"})


def dataset_M() -> Dataset:
    """Same table with the shared sixth feature zeroed out everywhere.

    Training inputs become pairwise orthogonal: each example can only be fit
    through its own idiosyncratic coordinate, so nothing transfers to the
    held-out row.
    """
    train = (
        _ex([1, 0, 0, 0, 0, 0], [1.0]),
        _ex([0, -1, 0, 0, 0, 0], [-1.0]),
        _ex([0, 0, -1, 0, 0, 0], [-1.0]),
        _ex([0, 0, 0, 1, 0, 0], [1.0]),
    )
    test = (_ex([0, 0, 0, 0, -1, 0], [-1.0]),)
    return Dataset(train, test, {"name": "M", "task": "regression"})


def make_clusters(n_train: int, n_test: int, dims: int, classes: int,
                  spread: float, seed: int) -> Dataset:
    """Gaussian class clusters with separated means.

    Class c's mean is the unit one-hot vector e_c embedded in the first
    `classes` coordinates; points are mean + spread * standard normal noise,
    so `spread` is the within-cluster standard deviation.  Labels are
    one-hot.
    """
    if classes < 2 or dims < classes:
        raise ValueError("need classes >= 2 and dims >= classes")
    if n_train < 0 or n_test < 0:
        raise ValueError("negative dataset size")
    rng = Rng(seed)
    means = np.zeros((classes, dims))
    means[np.arange(classes), np.arange(classes)] = 1.0

    def draw(n, tag):
        out = []
        for i in range(n):
            c = int(rng.integers(0, classes))
            x = means[c] + spread * rng.normal(dims)
            y = np.zeros(classes)
            y[c] = 1.0
            out.append(Example(x, y, tag))
        return tuple(out)

    train = draw(n_train, PRISTINE)
    test = draw(n_test, NO_TAG)
    meta = {"name": "clusters", "task": "classification", "seed": seed,
            "n_train": n_train, "n_test": n_test, "dims": dims,
            "classes": classes, "spread": spread}
    return Dataset(train, test, meta)


def with_label_noise(d: Dataset, fraction: float, seed: int) -> Dataset:
    """Resample labels of floor(fraction * n) uniformly chosen training rows.

    Resampling is uniform over all classes, so a corrupted row keeps its
    original label with probability 1/C; it is still tagged corrupt.
    Untouched rows are tagged pristine.  Test rows are never modified.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction out of [0, 1]")
    if d.meta.get("task") != "classification":
        raise ValueError("label noise requires a classification dataset")
    rng = Rng(seed)
    n = len(d.train)
    k = int(np.floor(fraction * n))
    chosen = set(int(i) for i in rng.choice(n, k)) if k else set()
    classes = d.n_classes
    train = []
    for i, z in enumerate(d.train):
        if i in chosen:
            y = np.zeros(classes)
            y[int(rng.integers(0, classes))] = 1.0
            train.append(Example(z.x, y, CORRUPT))
        else:
            train.append(Example(z.x, z.y, PRISTINE))
    meta = dict(d.meta, label_noise=fraction, noise_seed=seed)
    return Dataset(tuple(train), d.test, meta)


def with_pixel_noise(d: Dataset, fraction: float, seed: int) -> Dataset:
    """Replace floor(fraction * n) training inputs with standard Gaussian
    vectors of the same dimension, tagging them corrupt."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction out of [0, 1]")
    rng = Rng(seed)
    n = len(d.train)
    k = int(np.floor(fraction * n))
    chosen = set(int(i) for i in rng.choice(n, k)) if k else set()
    train = []
    for i, z in enumerate(d.train):
        if i in chosen:
            train.append(Example(rng.normal(len(z.x)), z.y, CORRUPT))
        else:
            train.append(Example(z.x, z.y, PRISTINE))
    meta = dict(d.meta, pixel_noise=fraction, noise_seed=seed)
    return Dataset(tuple(train), d.test, meta)


def outlier_regression(m: int = 100, sigma: float = 1.0,
                       n_outliers: int = 10, seed: int = 0) -> Dataset:
    """1-D linear regression y = 2x + 3 + N(0, sigma^2) on x ~ U[-2, 2],
    with n_outliers points among those having x >= 1.0 forced to y = -1.0.

    Inputs are length-2 vectors (x, 1) so a linear model fits slope and
    intercept jointly.  Outliers are tagged corrupt.
    """
    rng = Rng(seed)
    xs = rng.uniform(-2.0, 2.0, m)
    ys = 2.0 * xs + 3.0 + sigma * rng.normal(m)
    candidates = np.flatnonzero(xs >= 1.0)
    if len(candidates) < n_outliers:
        raise ValueError("not enough points with x >= 1.0 for outliers")
    chosen = set(int(i) for i in
                 candidates[rng.choice(len(candidates), n_outliers)]) if n_outliers else set()
    train = []
    for i in range(m):
        y = -1.0 if i in chosen else ys[i]
        tag = CORRUPT if i in chosen else PRISTINE
        train.append(_ex([xs[i], 1.0], [y], tag))
    meta = {"name": "outliers", "task": "regression", "seed": seed,
            "sigma": sigma, "n_outliers": n_outliers}
    return Dataset(tuple(train), (), meta)


def write_csv(d: Dataset, features_path: str, labels_path: str) -> None:
    """Dump a dataset as a features CSV and a labels/tags CSV."""
    dims = d.dims
    with open(features_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["split"] + [f"x{j}" for j in range(dims)])
        for split, rows in (("train", d.train), ("test", d.test)):
            for z in rows:
                w.writerow([split] + [repr(float(v)) for v in z.x])
    with open(labels_path, "w", newline="") as f:
        w = csv.writer(f)
        ydim = len((d.train or d.test)[0].y) if (d.train or d.test) else 0
        w.writerow(["split"] + [f"y{j}" for j in range(ydim)] + ["tag"])
        for split, rows in (("train", d.train), ("test", d.test)):
            for z in rows:
                w.writerow([split] + [repr(float(v)) for v in z.y] + [z.tag])
