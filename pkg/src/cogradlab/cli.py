"""Command-line front end.

Subcommands:

* ``gen-data``             — synthesize a dataset and write it as CSVs.
* ``train``                — run a training config; writes a self-describing
                             run directory (manifest.json, snapshots.csv,
                             trajectory.csv).
* ``coherence``            — alpha report for a CSV stack of per-example
                             gradients.
* ``bound``                — generalization-gap bound report from a run
                             directory's trajectory.
* ``repro``                — scripted reproduction experiments; exit status
                             0 iff every check passes.
* ``compare-aggregators``  — one config across several aggregation rules,
                             summarized in a grid CSV.

Config files are JSON with three sections (dataset, model, train); unknown
keys are rejected.  Flags override file values.  The default output root is
the COGRADLAB_OUT environment variable, falling back to ./runs.  A
divergent training run exits 0 with the divergence flag recorded in the
manifest: instability is data, not an error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bound as bound_mod
from .aggregators import Aggregator
from .coherence import alpha_from_grads
from .datasets import (dataset_L, dataset_M, make_clusters,
                       outlier_regression, with_label_noise,
                       with_pixel_noise, write_csv)
from .models import make_model
from .repro import EXPERIMENT_IDS, run_experiment
from .trainer import TrainConfig, train, write_snapshots_csv, \
    write_trajectory_csv

SCHEMA_VERSION = 1

_DATASET_KEYS = {"kind", "n_train", "n_test", "dims", "classes", "spread",
                 "seed", "label_noise", "pixel_noise", "noise_seed",
                 "m", "sigma", "n_outliers"}
_MODEL_KEYS = {"kind", "dims", "hidden", "classes", "init_value"}
_TRAIN_KEYS = {"steps", "lr", "schedule", "batch_size", "micro_batch",
               "aggregator", "c", "k_groups", "seed", "eval_train",
               "eval_test", "snapshot_drop", "trajectory_stride",
               "trace_coords"}
_TOP_KEYS = {"dataset", "model", "train", "out"}


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where} config")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as f:
        cfg = json.load(f)
    _check_keys(cfg, _TOP_KEYS, "top-level")
    _check_keys(cfg.get("dataset", {}), _DATASET_KEYS, "dataset")
    _check_keys(cfg.get("model", {}), _MODEL_KEYS, "model")
    _check_keys(cfg.get("train", {}), _TRAIN_KEYS, "train")
    return cfg


def build_dataset(spec: dict, seed: int):
    kind = spec.get("kind", "clusters")
    if kind == "L":
        data = dataset_L()
    elif kind == "M":
        data = dataset_M()
    elif kind == "clusters":
        data = make_clusters(spec.get("n_train", 500),
                             spec.get("n_test", 100),
                             spec.get("dims", 32), spec.get("classes", 10),
                             spec.get("spread", 0.5),
                             spec.get("seed", seed))
    elif kind == "outliers":
        data = outlier_regression(spec.get("m", 100),
                                  spec.get("sigma", 1.0),
                                  spec.get("n_outliers", 10),
                                  spec.get("seed", seed))
    else:
        raise ConfigError(f"unknown dataset kind '{kind}'")
    noise_seed = spec.get("noise_seed", seed + 1)
    if spec.get("label_noise"):
        data = with_label_noise(data, spec["label_noise"], noise_seed)
    if spec.get("pixel_noise"):
        data = with_pixel_noise(data, spec["pixel_noise"], noise_seed)
    return data


def build_model(spec: dict):
    kw = {k: v for k, v in spec.items() if k != "kind"}
    if "hidden" in kw:
        kw["hidden"] = tuple(kw["hidden"])
    return make_model(spec.get("kind", "linear"), **kw)


def build_train_config(spec: dict, seed: int) -> TrainConfig:
    agg = Aggregator(spec.get("aggregator", "mean"),
                     c=float(spec.get("c", 0.0)),
                     k_groups=int(spec.get("k_groups", 1)))
    return TrainConfig(
        steps=spec.get("steps", 1000),
        lr=spec.get("lr", 0.1),
        schedule=spec.get("schedule", "constant"),
        batch_size=spec.get("batch_size"),
        micro_batch=spec.get("micro_batch"),
        aggregator=agg,
        seed=spec.get("seed", seed),
        eval_train=spec.get("eval_train", 256),
        eval_test=spec.get("eval_test", 256),
        snapshot_drop=spec.get("snapshot_drop", 0.01),
        trajectory_stride=spec.get("trajectory_stride", 1),
        trace_coords=tuple(spec.get("trace_coords", ())),
    )


def _out_root(args) -> str:
    return args.out or os.environ.get("COGRADLAB_OUT", "runs")


def _say(args, msg: str):
    if not args.quiet:
        print(msg)


def cmd_gen_data(args) -> int:
    cfg = _load_config(args.config)
    data = build_dataset(cfg.get("dataset", {}), args.seed)
    out = _out_root(args)
    os.makedirs(out, exist_ok=True)
    fpath = os.path.join(out, "features.csv")
    lpath = os.path.join(out, "labels.csv")
    write_csv(data, fpath, lpath)
    with open(os.path.join(out, "meta.json"), "w") as f:
        json.dump(dict(data.meta, schema_version=SCHEMA_VERSION), f, indent=2)
    _say(args, f"wrote {fpath} and {lpath}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    data = build_dataset(cfg.get("dataset", {}), args.seed)
    model = build_model(cfg.get("model", {"kind": "linear",
                                          "dims": data.dims}))
    tconf = build_train_config(dict(cfg.get("train", {}), seed=args.seed),
                               args.seed)
    params, log = train(model, model.init_params(args.seed), data, tconf)
    out = _out_root(args)
    os.makedirs(out, exist_ok=True)
    write_snapshots_csv(log, os.path.join(out, "snapshots.csv"))
    write_trajectory_csv(log, os.path.join(out, "trajectory.csv"))
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "seed": args.seed,
        "dataset_meta": data.meta,
        "diverged": log.diverged,
        "final_metrics": log.final_metrics,
        "m": len(data.train),
    }
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
    _say(args, f"run written to {out} (diverged={log.diverged})")
    return 0


def cmd_coherence(args) -> int:
    grads = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
    report = alpha_from_grads(grads).to_json()
    text = json.dumps(report, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "coherence.json"), "w") as f:
            f.write(text + "\n")
    _say(args, text)
    return 0


def cmd_bound(args) -> int:
    run_dir = args.input
    with open(os.path.join(run_dir, "manifest.json")) as f:
        manifest = json.load(f)
    rows = np.loadtxt(os.path.join(run_dir, "trajectory.csv"),
                      delimiter=",", skiprows=1, ndmin=2)
    etas = tuple(float(r) for r in rows[:, 1])
    alphas = tuple(float(r) for r in rows[:, 2])
    inputs = bound_mod.BoundInputs(m=manifest["m"], etas=etas, alphas=alphas,
                                   L_lip=args.L, beta=args.beta)
    report = bound_mod.bound_report(inputs)
    report["per_term"] = report["per_term"][:20] + (
        ["..."] if len(report["per_term"]) > 20 else [])
    text = json.dumps(report, indent=2)
    out = args.out or run_dir
    with open(os.path.join(out, "bound.json"), "w") as f:
        f.write(text + "\n")
    _say(args, text)
    return 0


def cmd_repro(args) -> int:
    ids = EXPERIMENT_IDS if args.experiment == "all" else (args.experiment,)
    root = _out_root(args)
    ok = True
    for exp in ids:
        verdict = run_experiment(exp, os.path.join(root, exp),
                                 seed=args.seed)
        status = "pass" if verdict.passed else "FAIL"
        _say(args, f"{exp}: {status}")
        if not verdict.passed:
            ok = False
            for c in verdict.checks:
                if not c.passed:
                    _say(args, f"  {c.name}: expected {c.expected}, "
                               f"observed {c.observed}")
    return 0 if ok else 1


def cmd_compare_aggregators(args) -> int:
    cfg = _load_config(args.config)
    data = build_dataset(cfg.get("dataset", {}), args.seed)
    tspec = cfg.get("train", {})
    out = _out_root(args)
    os.makedirs(out, exist_ok=True)
    rows = []
    combos = [("mean", {}), ("winsorized", {"c": 2.0}),
              ("winsorized", {"c": 8.0}),
              ("median_of_means", {"k_groups": 4}), ("m3", {})]
    for kind, kw in combos:
        model = build_model(cfg.get("model", {"kind": "linear",
                                              "dims": data.dims}))
        spec = dict(tspec, aggregator=kind, **kw, seed=args.seed)
        if kind == "m3" and "micro_batch" not in spec:
            spec["micro_batch"] = max(1, (spec.get("batch_size")
                                          or len(data.train)) // 3)
        tconf = build_train_config(spec, args.seed)
        _, log = train(model, model.init_params(args.seed), data, tconf)
        fm = log.final_metrics
        label = kind + (f"_c{kw['c']:g}" if "c" in kw else "") \
            + (f"_k{kw['k_groups']}" if "k_groups" in kw else "")
        rows.append((label, fm["train_loss"], fm["test_loss"],
                     fm["train_acc"], fm["test_acc"], log.diverged))
    path = os.path.join(out, "aggregator_grid.csv")
    with open(path, "w") as f:
        f.write("aggregator,train_loss,test_loss,train_acc,test_acc,"
                "diverged\n")
        for r in rows:
            f.write(",".join(str(x) if isinstance(x, (str, bool))
                             else repr(float(x)) for x in r) + "\n")
    _say(args, f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cogradlab",
        description="gradient-coherence laboratory: training, metrics, "
                    "robust aggregation, generalization bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--out", help="output directory "
                                     "(default: $COGRADLAB_OUT or ./runs)")
        p.add_argument("--quiet", action="store_true")

    common(sub.add_parser("gen-data", help="synthesize a dataset"))
    common(sub.add_parser("train", help="run a training config"))
    p = sub.add_parser("coherence", help="alpha report for a gradient CSV")
    common(p)
    p.add_argument("--input", required=True, help="CSV of per-example "
                   "gradients (header row, one gradient per line)")
    p = sub.add_parser("bound", help="gap bound from a run directory")
    common(p)
    p.add_argument("--input", required=True, help="run directory")
    p.add_argument("--L", type=float, default=1.0,
                   help="gradient-norm constant")
    p.add_argument("--beta", type=float, default=1.0,
                   help="smoothness constant")
    p = sub.add_parser("repro", help="scripted reproductions")
    common(p)
    p.add_argument("experiment", choices=EXPERIMENT_IDS + ("all",))
    common(sub.add_parser("compare-aggregators",
                          help="one config across aggregation rules"))

    args = parser.parse_args(argv)
    handlers = {
        "gen-data": cmd_gen_data,
        "train": cmd_train,
        "coherence": cmd_coherence,
        "bound": cmd_bound,
        "repro": cmd_repro,
        "compare-aggregators": cmd_compare_aggregators,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
