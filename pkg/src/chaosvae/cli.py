"""Command line entry point: ``chaosvae {preprocess,train-eval,compare,chaos-dump}``.

Options can come from a flat YAML file given with ``--config``; flags on
the command line override it.  Exit codes: 0 success, 2 input/config
error, 3 numerical failure.
"""

import argparse
from dataclasses import fields
import json
from pathlib import Path
import sys

import yaml

from . import chaos
from .data import load_schema, load_splits, read_csv, save_splits, split_one_class, synth_occ
from .errors import ChaosVaeError, InputError, NumericalError
from .experiment import compare, expand_grid, preset_grid, run_single
from .occ import ThresholdStrategy
from .vae import TrainConfig, save_model

EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_TRAIN_KEYS = [f.name for f in fields(TrainConfig)]


def _load_config(path):
    if path is None:
        return {}
    try:
        doc = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must be a key-value mapping")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _resolve(args):
    """Merge config file values with explicit command line flags."""
    merged = _load_config(getattr(args, "config", None))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "func"):
            merged[key] = value
    return merged


def _train_config(opts):
    known = {k: opts[k] for k in _TRAIN_KEYS if k in opts}
    if "model" in opts:
        known["noise"] = opts["model"]
    try:
        return TrainConfig(**known)
    except TypeError as exc:
        raise InputError(str(exc)) from exc


def _require(opts, key):
    if opts.get(key) is None:
        raise InputError(f"missing required option --{key.replace('_', '-')}")
    return opts[key]


def cmd_preprocess(opts):
    out = Path(_require(opts, "out"))
    if opts.get("synthetic"):
        try:
            seed, n_neg, n_pos, nf, shift = opts["synthetic"].split(":")
            dataset = synth_occ(int(seed), int(n_neg), int(n_pos), int(nf), float(shift))
        except ValueError as exc:
            raise InputError(f"--synthetic expects SEED:NNEG:NPOS:NF:SHIFT ({exc})") from exc
    else:
        schema = load_schema(_require(opts, "schema"))
        dataset = read_csv(_require(opts, "data"), schema)
    split = split_one_class(dataset)
    save_splits(out, split, dataset.schema, dataset.provenance)
    n_train, n_test = len(split.X_train), len(split.X_test)
    print(f"{len(dataset)} rows: {n_train} train / {n_test} test")
    print(f"{len(dataset.schema.columns)} columns -> {split.X_train.shape[1]} encoded features")
    print(f"pipeline {split.pipeline.pipeline_id} written to {out}")
    return 0


def _strategy(opts):
    return ThresholdStrategy.parse(opts.get("threshold", "train_percentile(99)"))


def cmd_train_eval(opts):
    split, header = load_splits(_require(opts, "splits"))
    config = _train_config(opts)
    strategy = _strategy(opts)
    tag = opts.get("dataset_tag", "dataset")
    model_tag = "cvae" if config.noise == "chaotic" else "vae"
    result = run_single(split, config, strategy)
    out = Path(opts.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{tag}_{model_tag}_run{config.init_seed}"
    echo = json.dumps({"train": config.to_dict(), "threshold": str(strategy),
                       "noise": result.model.noise.config(),
                       "pipeline_id": header["pipeline_id"]}, sort_keys=True)
    (out / f"{stem}_report.csv").write_text(result.report.to_text() + f"# config,{echo}\n")
    (out / f"{stem}_trace.csv").write_text(
        "epoch,loss\n" + "".join(f"{i + 1},{v!r}\n" for i, v in enumerate(result.trace))
        + f"# config,{echo}\n")
    save_model(out / f"{stem}_model.npz", result.model, config, header["pipeline_id"])
    print(f"{model_tag} on {tag}: threshold {result.report.threshold:.6g} "
          f"({strategy}), CR = {result.report.cr:.2f}")
    return 0


def cmd_compare(opts):
    split, _ = load_splits(_require(opts, "splits"))
    base = _train_config(opts)
    grid = opts.get("grid")
    if opts.get("paper_grid"):
        grid = preset_grid()
    if opts.get("single_config"):
        grid = None
    tag = opts.get("dataset_tag", "dataset")
    summary = compare(split, base, _strategy(opts),
                      run_count=int(opts.get("run_count", 15)),
                      base_seed=int(opts.get("base_seed", 0)), grid=grid,
                      dataset_tag=tag, jobs=int(opts.get("jobs", 1)))
    out = Path(opts.get("out", "."))
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{tag}_compare.csv").write_text(summary.to_csv())
    (out / f"{tag}_compare.txt").write_text(
        summary.to_text() + f"\nconfig: {summary.config_echo()}\n")
    keys = sorted(grid or {})
    combos = expand_grid(base, grid)
    for model_tag, runs in summary.per_run.items():
        for i, (_, _, crs) in enumerate(runs):
            echo = json.dumps({"model": model_tag, "run": i, "seed": summary.run_seeds[i],
                               "base_config": summary.base_config,
                               "threshold": summary.strategy}, sort_keys=True)
            lines = ["combination," + "".join(f"{k}," for k in keys) + "cr"]
            for j, cr in enumerate(crs):
                values = "".join(f"{getattr(combos[j], k)}," for k in keys)
                lines.append(f"{j},{values}{cr!r}")
            (out / f"{tag}_{model_tag}_run{i}.csv").write_text(
                "\n".join(lines) + f"\n# config,{echo}\n")
    sys.stdout.write(summary.to_text())
    return 0


def cmd_chaos_dump(opts):
    seed = float(_require(opts, "seed"))
    gen = chaos.ChaoticGenerator(seed, float(opts.get("lam", chaos.DEFAULT_LAMBDA)),
                                 int(opts.get("burn_in", chaos.DEFAULT_BURN_IN)))
    values = gen.sample((int(opts.get("count", 10)),), opts.get("transform", "raw"))
    text = "".join(f"{v!r}\n" for v in values.tolist())
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="chaosvae", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="encode a labelled CSV into train/test splits")
    p.add_argument("--config")
    p.add_argument("--data", help="CSV with a header row")
    p.add_argument("--schema", help="YAML schema file")
    p.add_argument("--synthetic", help="SEED:NNEG:NPOS:NF:SHIFT instead of a CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preprocess)

    def training_flags(p):
        p.add_argument("--config")
        p.add_argument("--splits", help="directory written by preprocess")
        p.add_argument("--dataset-tag")
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--momentum", type=float)
        p.add_argument("--activation")
        p.add_argument("--optimizer")
        p.add_argument("--total-layers", type=int)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--latent-dim", type=int)
        p.add_argument("--chaos-lambda", type=float)
        p.add_argument("--chaos-burn-in", type=int)
        p.add_argument("--chaos-transform", choices=["raw", "standardized"])
        p.add_argument("--threshold", help="train_percentile(P), constant(C) or literal_n_scaled")
        p.add_argument("--out")

    p = sub.add_parser("train-eval", help="train one model and score the fraud rows")
    training_flags(p)
    p.add_argument("--model", choices=["vae", "cvae"])
    p.add_argument("--init-seed", type=int)
    p.add_argument("--chaos-seed", type=float)
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("compare", help="multi-run VAE vs C-VAE comparison with t-test")
    training_flags(p)
    p.add_argument("--run-count", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--jobs", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--paper-grid", action="store_true", default=None)
    mode.add_argument("--single-config", action="store_true", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("chaos-dump", help="print logistic-map iterates, one per line")
    p.add_argument("--config")
    p.add_argument("--seed", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--transform", choices=["raw", "standardized"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_chaos_dump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(_resolve(args))
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        epoch = getattr(exc, "epoch", None)
        where = f" (epoch {epoch})" if epoch is not None else ""
        print(f"numerical failure{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ChaosVaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
