"""Deterministic (S)GD loop with pluggable gradient aggregation, coherence
instrumentation, low-watermark snapshotting, and run logging.

A *step* is one parameter update.  Mini-batches are drawn by a seeded
shuffle-without-replacement pass over the training set per epoch; the final
partial batch is kept.  The m3 aggregator consumes three micro-batches per
step, processed serially through the same epoch stream.

Instrumentation:

* trajectory — (eta_t, alpha(w_{t-1})) recorded every step on a fixed
  designated training evaluation sample; needed by the generalization-bound
  evaluator.  For long runs ``trajectory_stride`` subsamples the alpha
  measurements with piecewise-constant fill (an approximation knob).
* snapshots — a full metrics record (losses, accuracies, train/test
  coherence with per-segment breakdown, per-tag metrics, designated
  parameter coordinates) taken whenever the mini-batch training loss falls
  ``snapshot_drop`` (default 1%) below the previous low watermark.

A non-finite mini-batch loss stops the run and sets ``diverged`` — an
observation, not an error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .aggregators import Aggregator, aggregate
from .coherence import CoherenceStats, CoherenceReport, alpha
from .datasets import Dataset, PRISTINE, CORRUPT
from .models import Model
from .numkit import Rng


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    lr: float
    schedule: str = "constant"          # constant | linear_decay (eta / t)
    batch_size: int | None = None       # None => full batch
    micro_batch: int | None = None      # m3 micro-batch size
    aggregator: Aggregator = Aggregator("mean")
    seed: int = 0
    eval_train: int = 256               # designated coherence sample sizes
    eval_test: int = 256
    snapshot_drop: float = 0.01
    trajectory_stride: int = 1
    trace_coords: tuple = ()            # parameter indices logged in snapshots
    keep_params: bool = False           # store a parameter copy per snapshot

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.schedule not in ("constant", "linear_decay"):
            raise ValueError(f"unknown schedule: {self.schedule}")
        if self.steps < 0:
            raise ValueError("negative step count")

    def eta(self, t: int) -> float:
        """Step size at 1-indexed step t."""
        return self.lr if self.schedule == "constant" else self.lr / t


@dataclass(frozen=True)
class TagMetrics:
    loss: float
    acc: float
    report: CoherenceReport


@dataclass(frozen=True)
class Snapshot:
    step: int
    epoch: int
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float
    train_report: CoherenceReport
    test_report: CoherenceReport | None
    tags: dict = field(default_factory=dict)   # tag -> TagMetrics
    trace: tuple = ()
    params: np.ndarray | None = None           # only when config.keep_params


@dataclass
class RunLog:
    snapshots: list = field(default_factory=list)
    etas: list = field(default_factory=list)
    alphas: list = field(default_factory=list)   # alpha(w_{t-1}) per step
    diverged: bool = False
    final_metrics: dict = field(default_factory=dict)


class _BatchStream:
    """Seeded shuffle-without-replacement epoch iterator over row indices."""

    def __init__(self, n: int, batch: int, rng: Rng):
        self.n = n
        self.batch = min(batch, n)
        self.rng = rng
        self.order = rng.shuffle(n)
        self.pos = 0
        self.epoch = 0

    def next_batch(self) -> np.ndarray:
        if self.pos >= self.n:
            self.order = self.rng.shuffle(self.n)
            self.pos = 0
            self.epoch += 1
        idx = self.order[self.pos:self.pos + self.batch]
        self.pos += self.batch
        return idx


def _eval_subset(examples, size: int, rng: Rng):
    if len(examples) <= size:
        return tuple(examples)
    idx = rng.shuffle(len(examples))[:size]
    return tuple(examples[int(i)] for i in idx)


def _metrics(model: Model, params, examples, space):
    X = np.stack([z.x for z in examples])
    Y = np.stack([z.y for z in examples])
    loss = float(model.loss_batch(params, X, Y).mean())
    acc = float(model.accuracy_batch(params, X, Y).mean())
    grads = model.grads_batch(params, X, Y)
    report = alpha(CoherenceStats.from_grads(grads, space))
    return loss, acc, report


def measure_tagged(model: Model, params, dataset: Dataset) -> dict:
    """Loss / accuracy / coherence computed separately per training tag.

    Tags with no examples are simply absent from the result.
    """
    space = model.param_space()
    out = {}
    for tag in (PRISTINE, CORRUPT):
        subset = dataset.tagged(tag)
        if subset:
            loss, acc, report = _metrics(model, params, subset, space)
            out[tag] = TagMetrics(loss, acc, report)
    return out


def train(model: Model, params0, dataset: Dataset, config: TrainConfig):
    """Run the loop; returns (final params, RunLog)."""
    if not dataset.train:
        raise ValueError("empty training set")
    params = np.array(params0, dtype=np.float64, copy=True)
    space = model.param_space()
    n = len(dataset.train)
    rng = Rng(config.seed)

    train_eval = _eval_subset(dataset.train, config.eval_train, rng.spawn(1))
    test_eval = _eval_subset(dataset.test, config.eval_test, rng.spawn(2))
    Xe = np.stack([z.x for z in train_eval])
    Ye = np.stack([z.y for z in train_eval])

    agg = config.aggregator
    per_update = agg.micro_batches
    if per_update > 1:
        draw = config.micro_batch or max(1, (config.batch_size or n) // per_update)
    else:
        draw = config.batch_size or n
    stream = _BatchStream(n, draw, rng.spawn(3))
    X_all = np.stack([z.x for z in dataset.train])
    Y_all = np.stack([z.y for z in dataset.train])

    log = RunLog()
    watermark = math.inf
    last_alpha = None

    def eval_alpha():
        g = model.grads_batch(params, Xe, Ye)
        return alpha(CoherenceStats.from_grads(g)).alpha

    def take_snapshot(step, epoch):
        tr_loss, tr_acc, tr_rep = _metrics(model, params, train_eval, space)
        if test_eval:
            te_loss, te_acc, te_rep = _metrics(model, params, test_eval, space)
        else:
            te_loss, te_acc, te_rep = math.nan, math.nan, None
        log.snapshots.append(Snapshot(
            step, epoch, tr_loss, te_loss, tr_acc, te_acc, tr_rep, te_rep,
            measure_tagged(model, params, dataset),
            tuple(float(params[i]) for i in config.trace_coords),
            params.copy() if config.keep_params else None))
        return tr_loss, te_loss, tr_acc, te_acc

    take_snapshot(0, 0)

    for t in range(1, config.steps + 1):
        # trajectory alpha is measured at w_{t-1}, before the update
        if config.trajectory_stride <= 1 or (t - 1) % config.trajectory_stride == 0 \
                or last_alpha is None:
            last_alpha = eval_alpha()
        eta = config.eta(t)
        log.etas.append(eta)
        log.alphas.append(last_alpha)

        micro_means = []
        batch_loss_sum = 0.0
        batch_count = 0
        for _ in range(per_update):
            idx = stream.next_batch()
            Xb, Yb = X_all[idx], Y_all[idx]
            batch_loss_sum += float(model.loss_batch(params, Xb, Yb).sum())
            batch_count += len(idx)
            if per_update > 1:
                micro_means.append(model.grads_batch(params, Xb, Yb).mean(axis=0))
        batch_loss = batch_loss_sum / batch_count
        if not math.isfinite(batch_loss):
            log.diverged = True
            break

        if per_update > 1:
            update = aggregate(agg, np.stack(micro_means))
        else:
            grads = model.grads_batch(params, Xb, Yb)
            update = aggregate(agg, grads)
        params -= eta * update
        if not np.all(np.isfinite(params)):
            log.diverged = True
            break

        if batch_loss < (1.0 - config.snapshot_drop) * watermark:
            watermark = batch_loss
            take_snapshot(t, stream.epoch)

    if not log.diverged and log.snapshots[-1].step != config.steps:
        take_snapshot(config.steps, stream.epoch)
    last = log.snapshots[-1]
    log.final_metrics = {"train_loss": last.train_loss,
                         "test_loss": last.test_loss,
                         "train_acc": last.train_acc,
                         "test_acc": last.test_acc,
                         "diverged": log.diverged}
    return params, log


def snapshot_columns(log: RunLog) -> list:
    """Fixed CSV column order for a run's snapshot table."""
    cols = ["step", "epoch", "train_loss", "test_loss", "train_acc",
            "test_acc", "alpha_train", "alpha_hat_train", "alpha_test",
            "alpha_hat_test"]
    first = log.snapshots[0]
    for seg in first.train_report.per_segment:
        cols.append(f"alpha_hat_{seg.name}")
    tags = sorted({t for s in log.snapshots for t in s.tags})
    for tag in tags:
        cols += [f"loss_{tag}", f"acc_{tag}", f"alpha_hat_{tag}"]
    for i in range(len(first.trace)):
        cols.append(f"trace_{i}")
    return cols


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def write_snapshots_csv(log: RunLog, path: str) -> None:
    """Serialize snapshots with the fixed column order; floats as shortest
    round-trip decimals, empty cell for absent values."""
    cols = snapshot_columns(log)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for s in log.snapshots:
            row = {"step": s.step, "epoch": s.epoch,
                   "train_loss": _fmt(s.train_loss),
                   "test_loss": _fmt(s.test_loss),
                   "train_acc": _fmt(s.train_acc),
                   "test_acc": _fmt(s.test_acc),
                   "alpha_train": _fmt(s.train_report.alpha),
                   "alpha_hat_train": _fmt(s.train_report.alpha_hat)}
            if s.test_report is not None:
                row["alpha_test"] = _fmt(s.test_report.alpha)
                row["alpha_hat_test"] = _fmt(s.test_report.alpha_hat)
            for seg in s.train_report.per_segment:
                row[f"alpha_hat_{seg.name}"] = _fmt(seg.alpha_hat)
            for tag, tm in s.tags.items():
                row[f"loss_{tag}"] = _fmt(tm.loss)
                row[f"acc_{tag}"] = _fmt(tm.acc)
                row[f"alpha_hat_{tag}"] = _fmt(tm.report.alpha_hat)
            for i, v in enumerate(s.trace):
                row[f"trace_{i}"] = _fmt(v)
            w.writerow([row.get(c, "") for c in cols])


def write_trajectory_csv(log: RunLog, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "eta", "alpha"])
        for t, (eta, a) in enumerate(zip(log.etas, log.alphas), start=1):
            w.writerow([t, repr(float(eta)), repr(float(a))])
