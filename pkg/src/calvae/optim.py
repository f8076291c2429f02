"""Adam optimizer over the model's five dense layers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .nn import GradientTape
from .vae import VaeModel


@dataclass
class AdamHyper:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    hyper: AdamHyper
    m: dict[str, tuple[np.ndarray, np.ndarray]]
    v: dict[str, tuple[np.ndarray, np.ndarray]]
    step: int = 0

    @classmethod
    def for_model(cls, model: VaeModel, hyper: AdamHyper | None = None) -> "AdamState":
        layers = model.layers()

        def zeros():
            return {
                name: (np.zeros_like(l.weights), np.zeros_like(l.biases))
                for name, l in layers.items()
            }

        return cls(hyper=hyper or AdamHyper(), m=zeros(), v=zeros())


def _update(theta, g, m, v, t, h: AdamHyper):
    m[:] = h.beta1 * m + (1.0 - h.beta1) * g
    v[:] = h.beta2 * v + (1.0 - h.beta2) * g * g
    m_hat = m / (1.0 - h.beta1 ** t)
    v_hat = v / (1.0 - h.beta2 ** t)
    theta -= h.learning_rate * m_hat / (np.sqrt(v_hat) + h.eps)


def adam_step(state: AdamState, model: VaeModel, tape: GradientTape) -> None:
    """One Adam update applied in place to every weight and bias."""
    layers = model.layers()
    if set(tape.grads) != set(layers):
        raise SchemaError("gradient tape does not cover the model's layers")
    state.step += 1
    t = state.step
    for name, layer in layers.items():
        gw, gb = tape.grads[name]
        if gw.shape != layer.weights.shape or gb.shape != layer.biases.shape:
            raise SchemaError(f"gradient shapes do not match layer '{name}'")
        mw, mb = state.m[name]
        vw, vb = state.v[name]
        _update(layer.weights, gw, mw, vw, t, state.hyper)
        _update(layer.biases, gb, mb, vb, t, state.hyper)
