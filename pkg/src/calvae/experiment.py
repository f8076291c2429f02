"""End-to-end experiment runs: pipeline -> training -> evaluation -> artifacts.

Every run writes a fixed artifact set under its output directory; all files
are emitted write-then-rename and their bytes are fully determined by
(dataset, config, seed).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import median

import numpy as np

from .data import (
    FRAME_COLUMNS,
    INPUT_COLUMNS,
    Normalizer,
    SensorFrame,
    correlation_matrix,
    fit_normalizer,
    load_frame,
    split_train_eval,
)
from .errors import CalvaeError
from .metrics import EvalReport, evaluate, histogram
from .model_io import save_model
from .train import TARGET_ORDER, TrainConfig, TrainResult, train_model
from .vae import VaeModel, predict

MODEL_FILE = "model.calvae"
MANIFEST_FILE = "manifest.json"

ARTIFACT_FILES = (
    MODEL_FILE,
    "report_unseen.tsv",
    "report_unseen.json",
    "report_all.tsv",
    "report_all.json",
    "predictions.tsv",
    "reconstruction.tsv",
    "histograms.json",
    "loss_curve.tsv",
    "correlation.tsv",
    MANIFEST_FILE,
)


@dataclass
class ExperimentResult:
    config: TrainConfig
    frame: SensorFrame
    train_frame: SensorFrame
    eval_frame: SensorFrame
    input_normalizer: Normalizer
    target_normalizer: Normalizer
    training: TrainResult
    report_unseen: EvalReport
    report_all: EvalReport

    @property
    def model(self) -> VaeModel:
        return self.training.model


def run_experiment(config: TrainConfig) -> ExperimentResult:
    """Run one full experiment for config.target at config.seed."""
    if not config.dataset_path:
        raise CalvaeError("no dataset path configured")
    frame = load_frame(config.dataset_path)
    input_norm = fit_normalizer(frame, INPUT_COLUMNS)
    target_norm = fit_normalizer(frame, (config.target_column,))
    train_frame, eval_frame = split_train_eval(frame, config.train_count)

    x_train = input_norm.apply(train_frame.inputs)
    y_train = target_norm.apply(train_frame.column(config.target_column))
    training = train_model(x_train, y_train, config)

    kwargs = dict(bins=config.hist_bins, smoothing=config.hist_smoothing)
    report_unseen = evaluate(training.model, input_norm, target_norm,
                             eval_frame, config.target_column, **kwargs)
    report_all = evaluate(training.model, input_norm, target_norm,
                          frame, config.target_column, **kwargs)
    return ExperimentResult(config, frame, train_frame, eval_frame,
                            input_norm, target_norm, training,
                            report_unseen, report_all)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _r(value) -> str:
    return repr(float(value))


def _series_tables(result: ExperimentResult) -> tuple[str, str]:
    """predictions.tsv and reconstruction.tsv over the whole frame, with a
    split column marking seen vs unseen rows."""
    frame = result.frame
    cfg = result.config
    x_norm = result.input_normalizer.apply(frame.inputs)
    y_pred_norm, x_recon_norm = predict(result.model, x_norm)
    y_pred = result.target_normalizer.invert(y_pred_norm)
    x_recon = result.input_normalizer.invert(x_recon_norm)
    y_truth = frame.column(cfg.target_column)

    pred_lines = ["row\ttimestamp\tsplit\ttruth\tprediction"]
    recon_header = ["row", "timestamp", "split"]
    for col in INPUT_COLUMNS:
        recon_header += [f"{col} truth", f"{col} recon"]
    recon_lines = ["\t".join(recon_header)]
    for i, ts in enumerate(frame.timestamps):
        split = "train" if i < cfg.train_count else "unseen"
        stamp = ts.isoformat()
        pred_lines.append(
            f"{i}\t{stamp}\t{split}\t{_r(y_truth[i])}\t{_r(y_pred[i])}")
        cells = [str(i), stamp, split]
        for j in range(len(INPUT_COLUMNS)):
            cells += [_r(frame.inputs[i, j]), _r(x_recon[i, j])]
        recon_lines.append("\t".join(cells))
    return "\n".join(pred_lines) + "\n", "\n".join(recon_lines) + "\n"


def _histograms_json(result: ExperimentResult) -> str:
    """Truth/prediction histograms over the unseen split for the target and
    every input channel."""
    cfg = result.config
    frame = result.eval_frame
    x_norm = result.input_normalizer.apply(frame.inputs)
    y_pred_norm, x_recon_norm = predict(result.model, x_norm)
    y_pred = result.target_normalizer.invert(y_pred_norm)
    x_recon = result.input_normalizer.invert(x_recon_norm)

    def pair(truth, pred):
        lo = float(min(truth.min(), pred.min()))
        hi = float(max(truth.max(), pred.max()))
        edges = np.linspace(lo, hi, cfg.hist_bins + 1)
        return {
            "edges": edges.tolist(),
            "truth": histogram(truth, edges, cfg.hist_smoothing)
                     .probabilities.tolist(),
            "prediction": histogram(pred, edges, cfg.hist_smoothing)
                          .probabilities.tolist(),
        }

    doc = {
        "split": "unseen",
        "bins": cfg.hist_bins,
        "smoothing": cfg.hist_smoothing,
        "calibration": {cfg.target_column:
                        pair(frame.column(cfg.target_column), y_pred)},
        "reconstruction": {
            col: pair(frame.inputs[:, j], x_recon[:, j])
            for j, col in enumerate(INPUT_COLUMNS)
        },
    }
    return _json_text(doc)


def _loss_curve_table(result: ExperimentResult) -> str:
    lines = ["epoch\ttotal\trecon\tcal\tkld"]
    for i, parts in enumerate(result.training.loss_curve):
        lines.append(f"{i}\t{_r(parts.total)}\t{_r(parts.recon)}"
                     f"\t{_r(parts.cal)}\t{_r(parts.kld)}")
    return "\n".join(lines) + "\n"


def _correlation_table(frame: SensorFrame) -> str:
    corr = correlation_matrix(frame)
    lines = ["column\t" + "\t".join(FRAME_COLUMNS)]
    for label, row in zip(FRAME_COLUMNS, corr):
        lines.append(label + "\t" + "\t".join(_r(v) for v in row))
    return "\n".join(lines) + "\n"


def write_artifacts(result: ExperimentResult, out_dir) -> Path:
    """Emit the full artifact set; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config

    save_model(out / MODEL_FILE, result.model, result.input_normalizer,
               result.target_normalizer, cfg.target_column, cfg.seed,
               cfg.to_dict())
    _atomic_write(out / "report_unseen.tsv", result.report_unseen.to_table())
    _atomic_write(out / "report_unseen.json",
                  _json_text(result.report_unseen.to_dict()))
    _atomic_write(out / "report_all.tsv", result.report_all.to_table())
    _atomic_write(out / "report_all.json",
                  _json_text(result.report_all.to_dict()))
    predictions, reconstruction = _series_tables(result)
    _atomic_write(out / "predictions.tsv", predictions)
    _atomic_write(out / "reconstruction.tsv", reconstruction)
    _atomic_write(out / "histograms.json", _histograms_json(result))
    _atomic_write(out / "loss_curve.tsv", _loss_curve_table(result))
    _atomic_write(out / "correlation.tsv", _correlation_table(result.frame))

    manifest = {
        "target": cfg.target,
        "target_column": cfg.target_column,
        "config": cfg.to_dict(),
        "files": sorted(ARTIFACT_FILES),
        "rows": {
            "total": len(result.frame),
            "train": len(result.train_frame),
            "unseen": len(result.eval_frame),
        },
    }
    if result.report_unseen.reference_mae is not None:
        manifest["reference_mae"] = result.report_unseen.reference_mae
    manifest_path = out / MANIFEST_FILE
    _atomic_write(manifest_path, _json_text(manifest))
    return manifest_path


SUMMARY_METRICS = ("mae", "accuracy_pct", "r2", "kld", "jsd")


def summarize_reports(reports: dict[int, EvalReport]) -> list[dict]:
    """Median and range per metric over seeds, calibration first."""
    rows = []
    seeds = sorted(reports)
    series = [("calibration", lambda r: r.calibration)]
    series += [(col, lambda r, c=col: r.reconstruction[c])
               for col in INPUT_COLUMNS]
    for label, pick in series:
        for metric in SUMMARY_METRICS:
            values = [getattr(pick(reports[s]), metric) for s in seeds]
            rows.append({
                "series": label,
                "metric": metric,
                "median": float(median(values)),
                "min": float(min(values)),
                "max": float(max(values)),
            })
    return rows


def summary_table(rows: list[dict], first_column: str = "series") -> str:
    lines = [f"{first_column}\tmetric\tmedian\tmin\tmax"]
    for row in rows:
        lines.append(f"{row[first_column]}\t{row['metric']}\t"
                     f"{_r(row['median'])}\t{_r(row['min'])}\t{_r(row['max'])}")
    return "\n".join(lines) + "\n"


def run_seeds(config: TrainConfig, seeds: list[int], out_dir) -> dict[int, EvalReport]:
    """Run one experiment per seed, write per-seed artifacts plus a
    median/range summary; returns the per-seed unseen reports."""
    out = Path(out_dir)
    reports: dict[int, EvalReport] = {}
    for seed in seeds:
        result = run_experiment(config.with_seed(seed))
        write_artifacts(result, out / f"seed_{seed}")
        reports[seed] = result.report_unseen
    if len(seeds) > 1:
        _atomic_write(out / "summary.tsv",
                      summary_table(summarize_reports(reports)))
    return reports


def run_all(config: TrainConfig, out_dir, seeds: list[int] | None = None):
    """All four targets with shared settings, in fixed order.

    Per-target failures are recorded and the remaining targets still run.
    Returns (reports keyed by target, errors keyed by target).
    """
    out = Path(out_dir)
    seeds = seeds or [config.seed]
    reports: dict[str, dict[int, EvalReport]] = {}
    failures: dict[str, str] = {}
    for target in TARGET_ORDER:
        cfg = replace(config, target=target)
        try:
            if len(seeds) == 1:
                result = run_experiment(cfg.with_seed(seeds[0]))
                write_artifacts(result, out / target)
                reports[target] = {seeds[0]: result.report_unseen}
            else:
                reports[target] = run_seeds(cfg, seeds, out / target)
        except CalvaeError as exc:
            failures[target] = str(exc)

    rows = []
    for target in TARGET_ORDER:
        if target not in reports:
            continue
        for row in summarize_reports(reports[target]):
            if row["series"] == "calibration":
                rows.append({**row, "target": target})
    _atomic_write(out / "summary.tsv", summary_table(rows, first_column="target"))
    return reports, failures
