"""Figure layouts over the snapshot / grid CSV schema (version 1).

Each layout reads one or more CSV files and draws a deterministic SVG.
Output is byte-stable: the SVG hash salt is pinned and the embedded
creation date is suppressed, so identical inputs yield identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

SCHEMA_VERSION = 1

plt.rcParams["svg.hashsalt"] = "cogradfigs"


class SchemaError(ValueError):
    """An input CSV does not conform to the declared schema."""


@dataclass(frozen=True)
class FigureSpec:
    layout: str
    inputs: tuple
    output: str
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout '{self.layout}'; expected one "
                             f"of {sorted(LAYOUTS)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.schema_version != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema version "
                              f"{self.schema_version}")

    @classmethod
    def from_file(cls, path: str) -> "FigureSpec":
        with open(path) as f:
            raw = json.load(f)
        return cls(layout=raw["layout"], inputs=tuple(raw["inputs"]),
                   output=raw["output"],
                   schema_version=raw.get("schema_version", SCHEMA_VERSION))


def _read_table(path: str) -> dict:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"empty CSV: {path}")
        rows = list(reader)
    return {name: [row[name] for row in rows] for name in reader.fieldnames}


def _column(table: dict, name: str, path: str) -> list:
    """Numeric column; a missing header or an all-empty column is a schema
    violation named after the column."""
    cells = table.get(name)
    if cells is None or all(c == "" for c in cells):
        raise SchemaError(f"missing column '{name}' in {path}")
    return [float(c) if c != "" else math.nan for c in cells]


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _save(fig, output: str) -> None:
    out_dir = os.path.dirname(output)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    fig.savefig(output, format="svg", metadata={"Date": None})
    plt.close(fig)


def _curves(spec: FigureSpec):
    path = spec.inputs[0]
    table = _read_table(path)
    step = _column(table, "step", path)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(step, _column(table, "train_loss", path), label="train loss")
    test = table.get("test_loss")
    if test is not None and any(c != "" for c in test):
        ax.plot(step, _column(table, "test_loss", path), label="test loss")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(_stem(path))
    ax.legend()
    return fig


def _alpha_panels(spec: FigureSpec):
    path = spec.inputs[0]
    table = _read_table(path)
    step = _column(table, "step", path)
    panels = [
        ("alpha_hat_train", step, "step"),
        ("alpha_hat_test", step, "step"),
        ("alpha_hat_train", _column(table, "train_loss", path),
         "train loss"),
        ("alpha_hat_test", _column(table, "test_loss", path), "test loss"),
    ]
    # a run without test-side coherence cannot fill the test panels
    _column(table, "alpha_test", path)
    fig, axes = plt.subplots(1, 4, figsize=(16, 3.5))
    for ax, (col, xs, xlabel) in zip(axes, panels):
        ax.plot(xs, _column(table, col, path))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(col)
    fig.suptitle(_stem(path))
    fig.tight_layout()
    return fig


def _layer_grid(spec: FigureSpec):
    path = spec.inputs[0]
    table = _read_table(path)
    step = _column(table, "step", path)
    skip = {"alpha_hat_train", "alpha_hat_test", "alpha_hat_pristine",
            "alpha_hat_corrupt"}
    segments = [c for c in table
                if c.startswith("alpha_hat_") and c not in skip]
    if not segments:
        raise SchemaError(f"missing column 'alpha_hat_<segment>' in {path}")
    fig, axes = plt.subplots(1, len(segments),
                             figsize=(4 * len(segments), 3.5), squeeze=False)
    for ax, col in zip(axes[0], segments):
        ax.plot(step, _column(table, col, path))
        ax.set_xlabel("step")
        ax.set_ylabel(col)
    fig.suptitle(_stem(path))
    fig.tight_layout()
    return fig


def _wsgd_grid(spec: FigureSpec):
    n = len(spec.inputs)
    cols = int(math.ceil(math.sqrt(n)))
    rows = int(math.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows),
                             squeeze=False)
    for i, path in enumerate(spec.inputs):
        table = _read_table(path)
        step = _column(table, "step", path)
        ax = axes[i // cols][i % cols]
        ax.plot(step, _column(table, "train_acc", path), label="train acc")
        ax.plot(step, _column(table, "test_acc", path), label="test acc")
        ax.set_ylim(0.0, 1.05)
        ax.set_title(_stem(path), fontsize=9)
        ax.legend(fontsize=7)
    for j in range(n, rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.tight_layout()
    return fig


def _heatmap(spec: FigureSpec):
    import numpy as np
    path = spec.inputs[0]
    table = _read_table(path)
    xs = _column(table, "w_bad_init", path)
    ys = _column(table, "w_good_init", path)
    zs = _column(table, "test_loss", path)
    x_axis = sorted(set(xs))
    y_axis = sorted(set(ys))
    grid = np.full((len(y_axis), len(x_axis)), math.nan)
    xi = {v: i for i, v in enumerate(x_axis)}
    yi = {v: i for i, v in enumerate(y_axis)}
    for x, y, z in zip(xs, ys, zs):
        grid[yi[y]][xi[x]] = z
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(x_axis, y_axis, grid, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="test loss")
    ax.set_xlabel("w_bad_init")
    ax.set_ylabel("w_good_init")
    ax.set_title(_stem(path))
    return fig


def _parameter_trace(spec: FigureSpec):
    path = spec.inputs[0]
    table = _read_table(path)
    step = _column(table, "step", path)
    traces = sorted((c for c in table if c.startswith("trace_")),
                    key=lambda c: int(c.split("_")[1]))
    if not traces:
        raise SchemaError(f"missing column 'trace_0' in {path}")
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in traces:
        ax.plot(step, _column(table, col, path), label=col)
    ax.set_xlabel("step")
    ax.set_ylabel("parameter value")
    ax.set_title(_stem(path))
    ax.legend()
    return fig


LAYOUTS = {
    "curves": _curves,
    "alpha_panels": _alpha_panels,
    "layer_grid": _layer_grid,
    "wsgd_grid": _wsgd_grid,
    "heatmap": _heatmap,
    "parameter_trace": _parameter_trace,
}


def render(spec: FigureSpec) -> str:
    """Draw the layout and write the SVG; returns the output path."""
    for path in spec.inputs:
        if not os.path.exists(path):
            raise SchemaError(f"input CSV not found: {path}")
    fig = LAYOUTS[spec.layout](spec)
    _save(fig, spec.output)
    return spec.output
