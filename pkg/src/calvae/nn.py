"""Dense-layer math for the fixed small architecture.

Everything here works on float64 arrays. A "vector" argument may also be a
batch of vectors with shape (batch, dim); parameter gradients are then summed
over the batch while input gradients keep the batch axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import SchemaError


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    LINEAR = "linear"


_SIGMOID_LO = np.nextafter(0.0, 1.0)
_SIGMOID_HI = np.nextafter(1.0, 0.0)


def sigmoid(x):
    """Logistic function, overflow-safe for large |x|.

    Saturated values are clamped into the open interval (0, 1) so the
    derivative s*(1-s) never collapses to exactly zero.
    """
    x = np.asarray(x, dtype=np.float64)
    # exp only ever sees non-positive arguments
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(s, _SIGMOID_LO, _SIGMOID_HI)


def sigmoid_derivative(s):
    """Derivative expressed through the forward output s = sigmoid(x)."""
    s = np.asarray(s, dtype=np.float64)
    return s * (1.0 - s)


@dataclass
class DenseLayer:
    """Fully connected layer: activation(W @ x + b)."""

    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: Activation = Activation.SIGMOID

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2:
            raise SchemaError("weights must be a 2-D (out, in) matrix")
        if self.biases.shape != (self.weights.shape[0],):
            raise SchemaError(
                f"biases shape {self.biases.shape} does not match "
                f"{self.weights.shape[0]} output nodes"
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise SchemaError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def glorot(cls, out_dim: int, in_dim: int, activation: Activation,
               rng: np.random.Generator) -> "DenseLayer":
        """Glorot-uniform weights, zero biases, drawn from rng."""
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation)


def dense_forward(layer: DenseLayer, x: np.ndarray):
    """Return (pre_activation, output); both are kept for the backward pass."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.in_dim:
        raise SchemaError(
            f"input dim {x.shape[-1]} does not match layer in_dim {layer.in_dim}"
        )
    pre = x @ layer.weights.T + layer.biases
    if layer.activation is Activation.SIGMOID:
        out = sigmoid(pre)
    else:
        out = pre
    return pre, out


def dense_backward(layer: DenseLayer, pre_activation: np.ndarray,
                   x: np.ndarray, upstream: np.ndarray):
    """Chain-rule step through one layer.

    Returns (grad_weights, grad_biases, grad_input). For batched inputs the
    parameter gradients are summed over the batch axis.
    """
    pre = np.asarray(pre_activation, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != pre.shape:
        raise SchemaError(
            f"upstream shape {upstream.shape} does not match pre-activation "
            f"shape {pre.shape}"
        )
    if x.shape[-1] != layer.in_dim or pre.shape[-1] != layer.out_dim:
        raise SchemaError("cached shapes do not match the layer")

    if layer.activation is Activation.SIGMOID:
        delta = upstream * sigmoid_derivative(sigmoid(pre))
    else:
        delta = upstream

    if x.ndim == 1:
        grad_weights = np.outer(delta, x)
        grad_biases = delta.copy()
    else:
        grad_weights = delta.T @ x
        grad_biases = delta.sum(axis=0)
    grad_input = delta @ layer.weights
    return grad_weights, grad_biases, grad_input


@dataclass
class GradientTape:
    """Per-layer (weight, bias) gradients, shape-congruent with the model."""

    grads: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, layers: dict[str, DenseLayer]) -> "GradientTape":
        return cls({
            name: (np.zeros_like(l.weights), np.zeros_like(l.biases))
            for name, l in layers.items()
        })

    def set(self, name: str, grad_weights: np.ndarray, grad_biases: np.ndarray):
        gw, gb = self.grads[name]
        if grad_weights.shape != gw.shape or grad_biases.shape != gb.shape:
            raise SchemaError(f"gradient shapes do not match layer '{name}'")
        self.grads[name] = (np.asarray(grad_weights, dtype=np.float64),
                            np.asarray(grad_biases, dtype=np.float64))

    def weight_grad(self, name: str) -> np.ndarray:
        return self.grads[name][0]

    def bias_grad(self, name: str) -> np.ndarray:
        return self.grads[name][1]


def finite_difference_gradients(scalar_fn, params: list[np.ndarray],
                                h: float = 1e-5) -> list[np.ndarray]:
    """Central finite differences of scalar_fn w.r.t. each array in params.

    scalar_fn is called with no arguments and must read the (mutated) arrays;
    each entry is perturbed in place by +/- h and restored afterwards. This is
    the independent check for the analytic backward pass.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = scalar_fn()
            flat[i] = orig - h
            f_minus = scalar_fn()
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def relative_error(a: float, b: float, floor: float = 1e-8) -> float:
    """|a - b| / max(|a|, |b|, floor), the gradient-check discrepancy measure."""
    return abs(a - b) / max(abs(a), abs(b), floor)
