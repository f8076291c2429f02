"""Latent-space sensor calibration with a small variational autoencoder.

The 1-D stochastic latent of a dense VAE is trained to match reference gas
concentrations while the decoder keeps reconstructing the raw multi-sensor
inputs, so one model calibrates and autoencodes simultaneously.
"""

from .data import (
    INPUT_COLUMNS,
    TARGET_COLUMNS,
    Normalizer,
    RawRecord,
    SensorFrame,
    batches,
    correlation_matrix,
    filter_complete,
    fit_normalizer,
    load_frame,
    parse_csv,
    split_train_eval,
)
from .errors import CalvaeError
from .experiment import ExperimentResult, run_all, run_experiment, write_artifacts
from .metrics import EvalReport, evaluate
from .model_io import load_model, save_model
from .optim import AdamHyper, AdamState, adam_step
from .train import TrainConfig, train_model
from .vae import ForwardTrace, LossWeights, VaeModel, backward, forward, loss, predict

__version__ = "0.1.0"

__all__ = [
    "AdamHyper",
    "AdamState",
    "CalvaeError",
    "EvalReport",
    "ExperimentResult",
    "ForwardTrace",
    "INPUT_COLUMNS",
    "LossWeights",
    "Normalizer",
    "RawRecord",
    "SensorFrame",
    "TARGET_COLUMNS",
    "TrainConfig",
    "VaeModel",
    "adam_step",
    "backward",
    "batches",
    "correlation_matrix",
    "evaluate",
    "filter_complete",
    "fit_normalizer",
    "forward",
    "load_frame",
    "load_model",
    "loss",
    "parse_csv",
    "predict",
    "run_all",
    "run_experiment",
    "save_model",
    "split_train_eval",
    "train_model",
    "write_artifacts",
]
