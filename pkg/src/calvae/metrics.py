"""Evaluation metrics: absolute-error scores, R^2, and histogram divergences,
plus assembly of the per-experiment report."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import INPUT_COLUMNS, Normalizer, SensorFrame
from .errors import MetricError
from .vae import VaeModel, predict

DEFAULT_BINS = 50
DEFAULT_SMOOTHING = 1e-10

# Best published calibration MAE for CO on this dataset (the DeepCM model);
# printed next to our own CO result for comparison.
CO_REFERENCE_MAE = 0.288

METRIC_HEADER = ("MAE", "Accuracy (%)", "R2", "KL Divergence", "JS Divergence")


def _pair(truth, pred):
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise MetricError(
            f"truth and pred must be equal-length vectors, got "
            f"{truth.shape} and {pred.shape}")
    if truth.size == 0:
        raise MetricError("empty inputs")
    return truth, pred


def mae(truth, pred) -> float:
    """Mean absolute deviation, in the units of the inputs."""
    truth, pred = _pair(truth, pred)
    return float(np.mean(np.abs(pred - truth)))


def accuracy_pct(truth, pred) -> tuple[float, int]:
    """100 minus the mean absolute percentage error.

    Terms with |truth| < 1e-12 are excluded from the mean; the second return
    value counts them. May be negative for terrible predictors.
    """
    truth, pred = _pair(truth, pred)
    keep = np.abs(truth) >= 1e-12
    excluded = int(np.size(keep) - np.count_nonzero(keep))
    if not keep.any():
        raise MetricError("accuracy undefined: all truth values are ~0")
    t, p = truth[keep], pred[keep]
    return float(100.0 - np.mean(100.0 * np.abs(p - t) / t)), excluded


def r_squared(truth, pred) -> float:
    """Coefficient of determination: 1 - SS_res / SS_tot."""
    truth, pred = _pair(truth, pred)
    if truth.size < 2:
        raise MetricError("r_squared needs at least 2 points")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("r_squared undefined for constant truth")
    ss_res = float(np.sum((truth - pred) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class Histogram:
    """Binned probability distribution; probabilities sum to 1."""

    bin_edges: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        self.bin_edges.setflags(write=False)
        self.probabilities.setflags(write=False)


def histogram(values, edges, smoothing: float = DEFAULT_SMOOTHING) -> Histogram:
    """Bin values into a probability distribution.

    Values outside the edge range clamp into the end bins; `smoothing` is
    added to every bin count before normalizing.
    """
    values = np.asarray(values, dtype=np.float64)
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or not (np.diff(edges) > 0).all():
        raise MetricError("edges must be at least 2 strictly ascending values")
    if smoothing < 0:
        raise MetricError("smoothing must be >= 0")
    nbins = edges.size - 1
    idx = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, nbins - 1)
    counts = np.bincount(idx, minlength=nbins).astype(np.float64) + smoothing
    total = counts.sum()
    if total == 0.0:
        raise MetricError("empty histogram with zero smoothing")
    return Histogram(edges.copy(), counts / total)


def _check_edges(p: Histogram, q: Histogram):
    if p.bin_edges.shape != q.bin_edges.shape or not np.array_equal(
            p.bin_edges, q.bin_edges):
        raise MetricError("histograms have different bin edges")


def kl_divergence(p: Histogram, q: Histogram) -> float:
    """Kullback-Leibler divergence sum(p * ln(p/q)), natural log.

    Terms with p = 0 contribute 0; any q bin of exactly 0 makes the
    divergence undefined (smoothing > 0 when binning prevents this).
    """
    _check_edges(p, q)
    pp, qq = p.probabilities, q.probabilities
    if (qq == 0.0).any():
        raise MetricError("KL divergence undefined: q has an empty bin")
    mask = pp > 0
    return float(np.sum(pp[mask] * np.log(pp[mask] / qq[mask])))


def js_divergence(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence against the binwise mixture (p+q)/2.

    Symmetric and bounded by ln 2. Bins empty in both inputs contribute 0.
    """
    _check_edges(p, q)
    m = (p.probabilities + q.probabilities) / 2.0

    def half(a):
        mask = a > 0
        return np.sum(a[mask] * np.log(a[mask] / m[mask]))

    return float(0.5 * (half(p.probabilities) + half(q.probabilities)))


def divergence_pair(truth, pred, bins: int = DEFAULT_BINS,
                    smoothing: float = DEFAULT_SMOOTHING) -> tuple[float, float]:
    """KLD(pred || truth) and JSD over shared equal-width bins spanning the
    union range of both series."""
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    lo = min(truth.min(), pred.min())
    hi = max(truth.max(), pred.max())
    if hi <= lo:
        raise MetricError("degenerate value range; cannot bin")
    edges = np.linspace(lo, hi, bins + 1)
    h_truth = histogram(truth, edges, smoothing)
    h_pred = histogram(pred, edges, smoothing)
    return kl_divergence(h_pred, h_truth), js_divergence(h_pred, h_truth)


@dataclass(frozen=True)
class ChannelMetrics:
    mae: float
    accuracy_pct: float
    accuracy_excluded: int
    r2: float
    kld: float
    jsd: float

    def row(self) -> tuple[float, float, float, float, float]:
        return (self.mae, self.accuracy_pct, self.r2, self.kld, self.jsd)


def channel_metrics(truth, pred, bins: int = DEFAULT_BINS,
                    smoothing: float = DEFAULT_SMOOTHING) -> ChannelMetrics:
    """All five metrics for one truth/prediction series pair."""
    acc, excluded = accuracy_pct(truth, pred)
    kld, jsd = divergence_pair(truth, pred, bins, smoothing)
    return ChannelMetrics(
        mae=mae(truth, pred),
        accuracy_pct=acc,
        accuracy_excluded=excluded,
        r2=r_squared(truth, pred),
        kld=kld,
        jsd=jsd,
    )


@dataclass(frozen=True)
class EvalReport:
    """Reconstruction metrics per input channel plus calibration metrics for
    the target, mirroring one experiment's result block."""

    target: str
    n_rows: int
    reconstruction: dict[str, ChannelMetrics]
    calibration: ChannelMetrics
    reference_mae: float | None = None  # external comparison value, if any

    def to_table(self) -> str:
        """Tab-delimited table, input channels first, target last."""
        lines = ["\t".join(("Sensor",) + METRIC_HEADER)]
        for name in INPUT_COLUMNS:
            m = self.reconstruction[name]
            lines.append("\t".join((name,) + tuple(repr(v) for v in m.row())))
        lines.append("\t".join(
            (self.target,) + tuple(repr(v) for v in self.calibration.row())))
        if self.reference_mae is not None:
            lines.append(f"# reference calibration MAE (DeepCM): "
                         f"{self.reference_mae!r} vs ours {self.calibration.mae!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        def entry(m: ChannelMetrics) -> dict:
            return {
                "mae": m.mae,
                "accuracy_pct": m.accuracy_pct,
                "accuracy_excluded": m.accuracy_excluded,
                "r2": m.r2,
                "kld": m.kld,
                "jsd": m.jsd,
            }

        d = {
            "target": self.target,
            "n_rows": self.n_rows,
            "reconstruction": {c: entry(self.reconstruction[c])
                               for c in INPUT_COLUMNS},
            "calibration": entry(self.calibration),
        }
        if self.reference_mae is not None:
            d["reference_mae"] = self.reference_mae
        return d


def evaluate(model: VaeModel, input_normalizer: Normalizer,
             target_normalizer: Normalizer, frame: SensorFrame,
             target_column: str, bins: int = DEFAULT_BINS,
             smoothing: float = DEFAULT_SMOOTHING) -> EvalReport:
    """Score a trained model over a frame, in physical units.

    Inputs are normalized, pushed through the model deterministically, and
    both the reconstruction and the latent calibration output are denormalized
    before any metric is computed.
    """
    x_norm = input_normalizer.apply(frame.inputs)
    y_pred_norm, x_recon_norm = predict(model, x_norm)
    x_recon = input_normalizer.invert(x_recon_norm)
    y_pred = target_normalizer.invert(y_pred_norm)
    y_truth = frame.column(target_column)

    reconstruction = {}
    for i, name in enumerate(INPUT_COLUMNS):
        try:
            reconstruction[name] = channel_metrics(
                frame.inputs[:, i], x_recon[:, i], bins, smoothing)
        except MetricError as exc:
            raise MetricError(f"channel {name!r}: {exc}") from exc
    try:
        calibration = channel_metrics(y_truth, y_pred, bins, smoothing)
    except MetricError as exc:
        raise MetricError(f"channel {target_column!r}: {exc}") from exc

    return EvalReport(
        target=target_column,
        n_rows=len(frame),
        reconstruction=reconstruction,
        calibration=calibration,
        reference_mae=CO_REFERENCE_MAE if target_column == "CO(GT)" else None,
    )
