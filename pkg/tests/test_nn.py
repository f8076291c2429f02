import warnings

import numpy as np
import pytest

from calvae.errors import SchemaError
from calvae.nn import (
    Activation,
    DenseLayer,
    GradientTape,
    dense_backward,
    dense_forward,
    finite_difference_gradients,
    relative_error,
    sigmoid,
    sigmoid_derivative,
)


class TestSigmoid:
    def test_zero(self):
        assert sigmoid(0.0) == 0.5

    def test_symmetry(self):
        for x in (-30.0, -2.5, -0.1, 0.7, 4.0, 30.0):
            assert abs(sigmoid(-x) - (1.0 - sigmoid(x))) <= 1e-15

    def test_saturation_no_overflow(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            hi = sigmoid(50.0)
            lo = sigmoid(-745.0)
        assert abs(hi - 1.0) <= 1e-15
        assert lo >= 0.0

    def test_output_range(self):
        x = np.linspace(-40, 40, 401)
        s = sigmoid(x)
        assert ((s > 0) & (s < 1)).all()
        d = sigmoid_derivative(s)
        assert ((d > 0) & (d <= 0.25)).all()


class TestDenseLayer:
    def test_shape_validation(self):
        with pytest.raises(SchemaError):
            DenseLayer(np.zeros((3, 2)), np.zeros(2), Activation.SIGMOID)

    def test_non_finite_rejected(self):
        w = np.zeros((2, 2))
        w[0, 0] = np.inf
        with pytest.raises(SchemaError):
            DenseLayer(w, np.zeros(2), Activation.LINEAR)

    def test_glorot_bounds_and_zero_bias(self):
        rng = np.random.default_rng(0)
        layer = DenseLayer.glorot(4, 4, Activation.SIGMOID, rng)
        limit = np.sqrt(6.0 / 8.0)
        assert (np.abs(layer.weights) <= limit).all()
        assert (layer.biases == 0).all()


class TestDenseForward:
    def test_zero_weights_sigmoid_gives_half(self):
        layer = DenseLayer(np.zeros((4, 4)), np.zeros(4), Activation.SIGMOID)
        _, out = dense_forward(layer, np.ones(4))
        assert (out == 0.5).all()

    def test_identity_linear(self):
        layer = DenseLayer(np.eye(4), np.zeros(4), Activation.LINEAR)
        x = np.array([0.3, -1.2, 4.0, 0.0])
        pre, out = dense_forward(layer, x)
        assert np.array_equal(out, x)
        assert np.array_equal(pre, x)

    def test_matches_loop_oracle(self):
        # independent oracle: explicit loop-based dot products
        rng = np.random.default_rng(42)
        w = rng.normal(size=(4, 4))
        b = rng.normal(size=4)
        x = rng.normal(size=4)
        layer = DenseLayer(w, b, Activation.SIGMOID)
        pre, out = dense_forward(layer, x)
        for i in range(4):
            acc = b[i]
            for j in range(4):
                acc += w[i, j] * x[j]
            assert pre[i] == pytest.approx(acc, rel=1e-15)
            assert out[i] == pytest.approx(1.0 / (1.0 + np.exp(-acc)), rel=1e-12)

    def test_batched_matches_per_row(self):
        # batched matmul may round differently from the vector kernel by ~1 ulp
        rng = np.random.default_rng(1)
        layer = DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=3),
                           Activation.SIGMOID)
        xb = rng.normal(size=(5, 4))
        pre_b, out_b = dense_forward(layer, xb)
        for k in range(5):
            pre, out = dense_forward(layer, xb[k])
            assert np.allclose(pre_b[k], pre, rtol=1e-12, atol=1e-15)
            assert np.allclose(out_b[k], out, rtol=1e-12, atol=1e-15)

    def test_shape_mismatch(self):
        layer = DenseLayer(np.zeros((4, 4)), np.zeros(4), Activation.LINEAR)
        with pytest.raises(SchemaError):
            dense_forward(layer, np.zeros(3))

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        layer = DenseLayer(rng.normal(size=(4, 4)), rng.normal(size=4),
                           Activation.SIGMOID)
        x = rng.normal(size=4)
        a = dense_forward(layer, x)
        b = dense_forward(layer, x)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestDenseBackward:
    def test_zero_upstream_zero_gradients(self):
        rng = np.random.default_rng(5)
        layer = DenseLayer(rng.normal(size=(4, 4)), rng.normal(size=4),
                           Activation.SIGMOID)
        x = rng.normal(size=4)
        pre, _ = dense_forward(layer, x)
        gw, gb, gx = dense_backward(layer, pre, x, np.zeros(4))
        assert (gw == 0).all() and (gb == 0).all() and (gx == 0).all()

    def test_identity_linear_passes_upstream(self):
        layer = DenseLayer(np.eye(4), np.zeros(4), Activation.LINEAR)
        x = np.arange(4.0)
        pre, _ = dense_forward(layer, x)
        upstream = np.array([1.0, -2.0, 0.5, 3.0])
        _, _, gx = dense_backward(layer, pre, x, upstream)
        assert np.array_equal(gx, upstream)

    @pytest.mark.parametrize("activation", [Activation.SIGMOID, Activation.LINEAR])
    def test_matches_finite_differences(self, activation):
        # scalarize via a fixed projection of the layer output
        rng = np.random.default_rng(11)
        layer = DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=3), activation)
        x = rng.normal(size=4)
        probe = rng.normal(size=3)

        def f():
            _, out = dense_forward(layer, x)
            return float(probe @ out)

        pre, _ = dense_forward(layer, x)
        gw, gb, _ = dense_backward(layer, pre, x, probe)
        fd_w, fd_b = finite_difference_gradients(f, [layer.weights, layer.biases])
        for a, b in zip(gw.ravel(), fd_w.ravel()):
            assert relative_error(a, b) < 1e-5
        for a, b in zip(gb, fd_b):
            assert relative_error(a, b) < 1e-5

    def test_shape_mismatch(self):
        layer = DenseLayer(np.zeros((4, 4)), np.zeros(4), Activation.LINEAR)
        x = np.zeros(4)
        pre, _ = dense_forward(layer, x)
        with pytest.raises(SchemaError):
            dense_backward(layer, pre, x, np.zeros(3))


class TestGradientTape:
    def test_untouched_parameters_are_zero(self):
        rng = np.random.default_rng(2)
        layers = {
            "a": DenseLayer(rng.normal(size=(2, 3)), rng.normal(size=2),
                            Activation.LINEAR),
            "b": DenseLayer(rng.normal(size=(1, 2)), rng.normal(size=1),
                            Activation.SIGMOID),
        }
        tape = GradientTape.zeros_like(layers)
        tape.set("a", np.ones((2, 3)), np.ones(2))
        assert (tape.weight_grad("b") == 0).all()
        assert (tape.bias_grad("b") == 0).all()

    def test_shape_guard(self):
        layers = {"a": DenseLayer(np.zeros((2, 3)), np.zeros(2), Activation.LINEAR)}
        tape = GradientTape.zeros_like(layers)
        with pytest.raises(SchemaError):
            tape.set("a", np.ones((3, 2)), np.ones(2))
