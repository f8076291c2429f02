"""Seeded mini-batch training of the calibration VAE."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import batch_indices
from .errors import SchemaError
from .optim import AdamHyper, AdamState, adam_step
from .vae import LossParts, LossWeights, VaeModel, backward, forward, loss

# CLI-facing target names to dataset column names
TARGETS = {
    "CO": "CO(GT)",
    "NMHC": "NMHC(GT)",
    "NOx": "NOx(GT)",
    "NO2": "NO2(GT)",
}
TARGET_ORDER = ("CO", "NMHC", "NOx", "NO2")


@dataclass
class TrainConfig:
    """Everything that determines one experiment; defaults are the
    reference settings."""

    dataset_path: str | None = None
    target: str = "CO"
    train_count: int = 300
    batch_size: int = 16
    epochs: int = 500
    seed: int = 0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    hist_bins: int = 50
    hist_smoothing: float = 1e-10

    def __post_init__(self):
        if self.target not in TARGETS:
            raise SchemaError(
                f"target must be one of {sorted(TARGETS)}, got {self.target!r}")

    @property
    def target_column(self) -> str:
        return TARGETS[self.target]

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta, self.gamma)

    def adam_hyper(self) -> AdamHyper:
        return AdamHyper(self.learning_rate, self.beta1, self.beta2,
                         self.adam_eps)

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "target": self.target,
            "train_count": self.train_count,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "hist_bins": self.hist_bins,
            "hist_smoothing": self.hist_smoothing,
        }


@dataclass
class TrainResult:
    model: VaeModel
    loss_curve: list[LossParts] = field(default_factory=list)


def train_model(x_norm: np.ndarray, y_norm: np.ndarray, config: TrainConfig,
                zero_noise: bool = False) -> TrainResult:
    """Train on normalized data; one rng (from config.seed) drives the
    weight initialization, the per-epoch shuffles, and the latent noise, so
    two runs with the same config are bit-identical.

    zero_noise forces epsilon = 0 for every step (diagnostics only).
    """
    x_norm = np.asarray(x_norm, dtype=np.float64)
    y_norm = np.asarray(y_norm, dtype=np.float64)
    n = x_norm.shape[0]
    if y_norm.shape != (n,):
        raise SchemaError("y_norm must be one value per training row")

    rng = np.random.default_rng(config.seed)
    model = VaeModel.initialize(rng)
    state = AdamState.for_model(model, config.adam_hyper())
    weights = config.loss_weights()

    curve: list[LossParts] = []
    for _ in range(config.epochs):
        sums = np.zeros(4)
        for idx in batch_indices(n, config.batch_size, rng):
            eps = (np.zeros(idx.size) if zero_noise
                   else rng.standard_normal(idx.size))
            xb, yb = x_norm[idx], y_norm[idx]
            trace = forward(model, xb, eps)
            parts = loss(trace, xb, yb, weights)
            tape = backward(model, trace, xb, yb, weights)
            adam_step(state, model, tape)
            sums += idx.size * np.array(
                [parts.total, parts.recon, parts.cal, parts.kld])
        curve.append(LossParts(*(float(v) for v in sums / n)))
    return TrainResult(model=model, loss_curve=curve)
