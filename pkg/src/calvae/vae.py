"""Calibration VAE: 4 inputs -> 1-D stochastic latent -> 4 reconstructed outputs.

The latent sample doubles as the calibration prediction, so the loss combines
reconstruction error, calibration error against the reference value, and an
optional divergence penalty on the latent Gaussian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, SchemaError
from .nn import Activation, DenseLayer, GradientTape, dense_backward, dense_forward

INPUT_DIM = 4
HIDDEN_DIM = 4
LATENT_DIM = 1

# Fixed evaluation order of the five layers; serialization and the optimizer
# both rely on it.
LAYER_NAMES = ("encoder", "mu_head", "logvar_head", "decoder_hidden", "decoder_out")


@dataclass
class LossWeights:
    """Coefficients of the composite loss."""

    alpha: float = 1.0  # reconstruction
    beta: float = 1.0  # calibration
    gamma: float = 0.0  # latent divergence


@dataclass
class VaeModel:
    encoder: DenseLayer  # 4 -> 4, sigmoid
    mu_head: DenseLayer  # 4 -> 1, linear
    logvar_head: DenseLayer  # 4 -> 1, linear
    decoder_hidden: DenseLayer  # 1 -> 4, sigmoid
    decoder_out: DenseLayer  # 4 -> 4, sigmoid

    def __post_init__(self):
        expected = {
            "encoder": (HIDDEN_DIM, INPUT_DIM, Activation.SIGMOID),
            "mu_head": (LATENT_DIM, HIDDEN_DIM, Activation.LINEAR),
            "logvar_head": (LATENT_DIM, HIDDEN_DIM, Activation.LINEAR),
            "decoder_hidden": (HIDDEN_DIM, LATENT_DIM, Activation.SIGMOID),
            "decoder_out": (INPUT_DIM, HIDDEN_DIM, Activation.SIGMOID),
        }
        for name, (out_dim, in_dim, act) in expected.items():
            layer = getattr(self, name)
            if layer.out_dim != out_dim or layer.in_dim != in_dim:
                raise SchemaError(
                    f"{name} must be {out_dim}x{in_dim}, got "
                    f"{layer.out_dim}x{layer.in_dim}"
                )
            if layer.activation is not act:
                raise SchemaError(f"{name} must use {act.value} activation")

    @classmethod
    def initialize(cls, rng: np.random.Generator) -> "VaeModel":
        """Glorot-uniform weights, zero biases, drawn in fixed layer order."""
        return cls(
            encoder=DenseLayer.glorot(HIDDEN_DIM, INPUT_DIM, Activation.SIGMOID, rng),
            mu_head=DenseLayer.glorot(LATENT_DIM, HIDDEN_DIM, Activation.LINEAR, rng),
            logvar_head=DenseLayer.glorot(LATENT_DIM, HIDDEN_DIM, Activation.LINEAR, rng),
            decoder_hidden=DenseLayer.glorot(HIDDEN_DIM, LATENT_DIM, Activation.SIGMOID, rng),
            decoder_out=DenseLayer.glorot(INPUT_DIM, HIDDEN_DIM, Activation.SIGMOID, rng),
        )

    def layers(self) -> dict[str, DenseLayer]:
        return {name: getattr(self, name) for name in LAYER_NAMES}

    def copy(self) -> "VaeModel":
        return VaeModel(**{
            name: DenseLayer(l.weights.copy(), l.biases.copy(), l.activation)
            for name, l in self.layers().items()
        })


@dataclass
class ForwardTrace:
    """Every intermediate of one forward pass, kept for the backward pass.

    Arrays are batched: x is (batch, 4), the latent quantities are (batch, 1).
    A single 4-vector input becomes a batch of one.
    """

    x: np.ndarray
    enc_pre: np.ndarray
    enc_out: np.ndarray
    mu: np.ndarray
    logvar: np.ndarray
    epsilon: np.ndarray
    z: np.ndarray
    dec_hidden_pre: np.ndarray
    dec_hidden_out: np.ndarray
    recon_pre: np.ndarray
    x_recon: np.ndarray

    @property
    def batch_size(self) -> int:
        return self.x.shape[0]


@dataclass
class LossParts:
    total: float
    recon: float
    cal: float
    kld: float


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != INPUT_DIM:
        raise SchemaError(f"input must have {INPUT_DIM} components, got shape {x.shape}")
    return x


def forward(model: VaeModel, x, epsilon) -> ForwardTrace:
    """Run the five layers and the reparameterized sampling step.

    epsilon is the standard-normal draw: a scalar, or one value per batch row.
    Pass 0 for deterministic inference.
    """
    xb = _as_batch(x)
    if not np.isfinite(xb).all():
        raise NumericError("input")
    n = xb.shape[0]
    eps = np.asarray(epsilon, dtype=np.float64)
    if eps.ndim == 0:
        eps = np.full((n, 1), float(eps))
    else:
        eps = eps.reshape(n, 1)

    enc_pre, enc_out = dense_forward(model.encoder, xb)
    _, mu = dense_forward(model.mu_head, enc_out)
    _, logvar = dense_forward(model.logvar_head, enc_out)
    z = mu + np.exp(0.5 * logvar) * eps
    dec_hidden_pre, dec_hidden_out = dense_forward(model.decoder_hidden, z)
    recon_pre, x_recon = dense_forward(model.decoder_out, dec_hidden_out)

    for name, value in (("encoder", enc_out), ("mu_head", mu),
                        ("logvar_head", logvar), ("latent", z),
                        ("decoder_hidden", dec_hidden_out),
                        ("decoder_out", x_recon)):
        if not np.isfinite(value).all():
            raise NumericError(name)

    return ForwardTrace(xb, enc_pre, enc_out, mu, logvar, eps, z,
                        dec_hidden_pre, dec_hidden_out, recon_pre, x_recon)


def _as_targets(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 0:
        y = y.reshape(1, 1)
    else:
        y = y.reshape(n, 1)
    if y.shape[0] != n:
        raise SchemaError("target count does not match the batch")
    return y


def loss(trace: ForwardTrace, x, y, w: LossWeights) -> LossParts:
    """Composite loss, averaged over the batch.

    recon: mean squared error over the 4 components; cal: squared error of the
    latent sample against the normalized reference; kld: divergence of
    N(mu, sigma^2) from the standard normal.
    """
    xb = _as_batch(x)
    yb = _as_targets(y, trace.batch_size)
    recon = float(np.mean((xb - trace.x_recon) ** 2))
    cal = float(np.mean((yb - trace.z) ** 2))
    kld = float(np.mean(
        -0.5 * (1.0 + trace.logvar - trace.mu ** 2 - np.exp(trace.logvar))
    ))
    total = w.alpha * recon + w.beta * cal + w.gamma * kld
    return LossParts(total, recon, cal, kld)


def backward(model: VaeModel, trace: ForwardTrace, x, y, w: LossWeights) -> GradientTape:
    """Gradients of the batch-mean composite loss for every parameter.

    The reparameterization path contributes dz/dmu = 1 and
    dz/dlogvar = 0.5 * exp(0.5 * logvar) * epsilon.
    """
    xb = _as_batch(x)
    n = trace.batch_size
    yb = _as_targets(y, n)
    tape = GradientTape.zeros_like(model.layers())

    # reconstruction MSE: mean over batch and over the 4 components
    d_recon = w.alpha * 2.0 * (trace.x_recon - xb) / (INPUT_DIM * n)
    gw, gb, d_hidden_out = dense_backward(
        model.decoder_out, trace.recon_pre, trace.dec_hidden_out, d_recon)
    tape.set("decoder_out", gw, gb)

    gw, gb, dz = dense_backward(
        model.decoder_hidden, trace.dec_hidden_pre, trace.z, d_hidden_out)
    tape.set("decoder_hidden", gw, gb)

    dz = dz + w.beta * 2.0 * (trace.z - yb) / n

    d_mu = dz + w.gamma * trace.mu / n
    d_logvar = (dz * 0.5 * np.exp(0.5 * trace.logvar) * trace.epsilon
                + w.gamma * 0.5 * (np.exp(trace.logvar) - 1.0) / n)

    gw, gb, d_enc_mu = dense_backward(
        model.mu_head, trace.mu, trace.enc_out, d_mu)
    tape.set("mu_head", gw, gb)

    gw, gb, d_enc_lv = dense_backward(
        model.logvar_head, trace.logvar, trace.enc_out, d_logvar)
    tape.set("logvar_head", gw, gb)

    gw, gb, _ = dense_backward(
        model.encoder, trace.enc_pre, trace.x, d_enc_mu + d_enc_lv)
    tape.set("encoder", gw, gb)
    return tape


def predict(model: VaeModel, x):
    """Deterministic inference (epsilon = 0): the prediction is mu itself.

    Returns (y_pred, x_recon), both in normalized space. Shapes follow the
    input: a single 4-vector yields a float and a 4-vector.
    """
    single = np.asarray(x).ndim == 1
    trace = forward(model, x, 0.0)
    y_pred = trace.z[:, 0]
    x_recon = trace.x_recon
    if single:
        return float(y_pred[0]), x_recon[0]
    return y_pred, x_recon
