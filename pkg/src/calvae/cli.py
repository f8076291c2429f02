"""Command-line experiment runner.

Subcommands: synth (write the surrogate dataset), run (one target),
run-all (all four targets), eval (score a saved model). Flags mirror the
TrainConfig fields; a YAML config file supplies values for flags that were
not given, and the CALVAE_DATASET environment variable is the fallback for
the dataset path.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import yaml

from .data import load_frame, split_train_eval
from .errors import CalvaeError
from .experiment import run_all, run_experiment, run_seeds, write_artifacts
from .metrics import evaluate
from .model_io import load_model
from .synthetic import DEFAULT_COMPLETE, DEFAULT_ROWS, DEFAULT_SEED, write_surrogate_csv
from .train import TARGETS, TrainConfig

DATASET_ENV = "CALVAE_DATASET"

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def _add_config_flags(parser: argparse.ArgumentParser, with_target: bool) -> None:
    parser.add_argument("--dataset", help="path to the sensor CSV "
                        f"(falls back to ${DATASET_ENV})")
    parser.add_argument("--config", help="YAML file with TrainConfig fields; "
                        "explicit flags win")
    if with_target:
        parser.add_argument("--target", choices=sorted(TARGETS),
                            help="gas to calibrate")
    parser.add_argument("--train-count", type=int, dest="train_count")
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--alpha", type=float, help="reconstruction loss weight")
    parser.add_argument("--beta", type=float, help="calibration loss weight")
    parser.add_argument("--gamma", type=float, help="latent divergence loss weight")
    parser.add_argument("--learning-rate", type=float, dest="learning_rate")
    parser.add_argument("--beta1", type=float)
    parser.add_argument("--beta2", type=float)
    parser.add_argument("--adam-eps", type=float, dest="adam_eps")
    parser.add_argument("--hist-bins", type=int, dest="hist_bins")
    parser.add_argument("--hist-smoothing", type=float, dest="hist_smoothing")
    parser.add_argument("--num-seeds", type=int, default=1, dest="num_seeds",
                        help="run this many consecutive seeds and summarize "
                        "median/range (the reference protocol uses 5)")


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            values = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise CalvaeError(f"cannot read config file: {exc}") from None
    except yaml.YAMLError as exc:
        raise CalvaeError(f"bad config file: {exc}") from None
    if not isinstance(values, dict):
        raise CalvaeError("config file must be a mapping of TrainConfig fields")
    unknown = set(values) - _CONFIG_FIELDS
    if unknown:
        raise CalvaeError(f"unknown config keys: {sorted(unknown)}")
    return values


def _build_config(args: argparse.Namespace) -> TrainConfig:
    values: dict = {}
    if args.config:
        values.update(_load_config_file(args.config))
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if args.dataset:
        values["dataset_path"] = args.dataset
    if not values.get("dataset_path"):
        values["dataset_path"] = os.environ.get(DATASET_ENV) or None
    if not values.get("dataset_path"):
        raise CalvaeError(
            f"no dataset given: use --dataset, a config file, or ${DATASET_ENV}")
    return TrainConfig(**values)


def _seeds(config: TrainConfig, num_seeds: int) -> list[int]:
    if num_seeds < 1:
        raise CalvaeError("--num-seeds must be >= 1")
    return [config.seed + i for i in range(num_seeds)]


def _cmd_synth(args) -> int:
    path = write_surrogate_csv(args.out, seed=args.seed, n_rows=args.rows,
                               n_complete=args.complete)
    print(f"wrote surrogate dataset: {path}")
    return 0


def _cmd_run(args) -> int:
    config = _build_config(args)
    seeds = _seeds(config, args.num_seeds)
    out = Path(args.out_dir)
    if len(seeds) == 1:
        result = run_experiment(config)
        write_artifacts(result, out)
        print(result.report_unseen.to_table(), end="")
    else:
        reports = run_seeds(config, seeds, out)
        print((out / "summary.tsv").read_text(), end="")
        del reports
    print(f"artifacts written to {out}")
    return 0


def _cmd_run_all(args) -> int:
    config = _build_config(args)
    seeds = _seeds(config, args.num_seeds)
    out = Path(args.out_dir)
    reports, failures = run_all(config, out, seeds)
    if (out / "summary.tsv").exists():
        print((out / "summary.tsv").read_text(), end="")
    print(f"artifacts written to {out}")
    for target, message in failures.items():
        print(f"error: target {target}: {message}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_eval(args) -> int:
    model, input_norm, target_norm, header = load_model(args.model)
    dataset = (args.dataset or os.environ.get(DATASET_ENV)
               or header["config"].get("dataset_path"))
    if not dataset:
        raise CalvaeError(
            f"no dataset given: use --dataset or ${DATASET_ENV}")
    frame = load_frame(dataset)
    cfg = header["config"]
    if args.split == "all":
        part = frame
    else:
        train_frame, eval_frame = split_train_eval(frame, cfg["train_count"])
        part = train_frame if args.split == "train" else eval_frame
    report = evaluate(model, input_norm, target_norm, part,
                      header["target_column"], bins=cfg["hist_bins"],
                      smoothing=cfg["hist_smoothing"])
    table = report.to_table()
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calvae",
        description="Train and evaluate latent-calibration VAEs on the "
                    "multi-sensor air-quality dataset.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a deterministic surrogate dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--rows", type=int, default=DEFAULT_ROWS)
    p.add_argument("--complete", type=int, default=DEFAULT_COMPLETE)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("run", help="train and evaluate one target")
    _add_config_flags(p, with_target=True)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("run-all", help="train and evaluate all four targets")
    _add_config_flags(p, with_target=False)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(fn=_cmd_run_all)

    p = sub.add_parser("eval", help="evaluate a saved model file")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset")
    p.add_argument("--split", choices=("unseen", "train", "all"),
                   default="unseen")
    p.add_argument("--out", help="also write the report table here")
    p.set_defaults(fn=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CalvaeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
