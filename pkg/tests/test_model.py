import numpy as np
import pytest

from calvae.errors import NumericError, SchemaError
from calvae.nn import (
    Activation,
    DenseLayer,
    finite_difference_gradients,
    relative_error,
)
from calvae.vae import (
    LAYER_NAMES,
    LossWeights,
    VaeModel,
    backward,
    forward,
    loss,
    predict,
)


def random_model(seed: int) -> VaeModel:
    return VaeModel.initialize(np.random.default_rng(seed))


def zero_logvar_model(seed: int) -> VaeModel:
    model = random_model(seed)
    model.logvar_head.weights[:] = 0.0
    model.logvar_head.biases[:] = 0.0
    return model


class TestForward:
    def test_zero_noise_gives_mu(self):
        model = random_model(0)
        x = np.array([0.2, 0.5, 0.8, 0.1])
        trace = forward(model, x, 0.0)
        assert np.array_equal(trace.z, trace.mu)

    def test_unit_noise_zero_logvar(self):
        model = zero_logvar_model(1)
        x = np.array([0.3, 0.3, 0.3, 0.3])
        trace = forward(model, x, 1.0)
        assert trace.z[0, 0] == pytest.approx(trace.mu[0, 0] + 1.0, abs=1e-15)

    def test_matches_straight_line_oracle(self):
        # independent transcription of the five layer equations
        model = random_model(7)
        x = np.array([0.15, 0.4, 0.9, 0.55])
        eps = 0.37
        trace = forward(model, x, eps)

        sig = lambda v: 1.0 / (1.0 + np.exp(-v))
        e = sig(model.encoder.weights @ x + model.encoder.biases)
        mu = model.mu_head.weights @ e + model.mu_head.biases
        lv = model.logvar_head.weights @ e + model.logvar_head.biases
        z = mu + np.exp(0.5 * lv) * eps
        h = sig(model.decoder_hidden.weights @ z + model.decoder_hidden.biases)
        xr = sig(model.decoder_out.weights @ h + model.decoder_out.biases)

        assert np.allclose(trace.enc_out[0], e, rtol=1e-12, atol=1e-15)
        assert np.allclose(trace.mu[0], mu, rtol=1e-12, atol=1e-15)
        assert np.allclose(trace.logvar[0], lv, rtol=1e-12, atol=1e-15)
        assert np.allclose(trace.z[0], z, rtol=1e-12, atol=1e-15)
        assert np.allclose(trace.dec_hidden_out[0], h, rtol=1e-12, atol=1e-15)
        assert np.allclose(trace.x_recon[0], xr, rtol=1e-12, atol=1e-15)

    def test_reparameterization_identity(self):
        model = random_model(3)
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = rng.uniform(0, 1, size=4)
            eps = rng.standard_normal()
            trace = forward(model, x, eps)
            lhs = trace.z - trace.mu
            rhs = np.exp(0.5 * trace.logvar) * trace.epsilon
            assert abs(lhs[0, 0] - rhs[0, 0]) <= 1e-15

    def test_non_finite_input_rejected(self):
        model = random_model(0)
        with pytest.raises(NumericError):
            forward(model, np.array([0.1, np.nan, 0.2, 0.3]), 0.0)

    def test_wrong_width_rejected(self):
        model = random_model(0)
        with pytest.raises(SchemaError):
            forward(model, np.zeros(3), 0.0)

    def test_topology_enforced(self):
        bad = DenseLayer(np.zeros((2, 4)), np.zeros(2), Activation.LINEAR)
        layers = random_model(0).layers()
        layers["mu_head"] = bad
        with pytest.raises(SchemaError):
            VaeModel(**layers)


class TestLoss:
    def test_perfect_fit_zero(self):
        model = random_model(2)
        x = np.array([0.4, 0.6, 0.2, 0.7])
        trace = forward(model, x, 0.0)
        parts = loss(trace, trace.x_recon[0], trace.z[0, 0], LossWeights())
        assert parts.recon == 0.0
        assert parts.cal == 0.0
        assert parts.total == 0.0

    def test_kld_zero_at_standard_normal(self):
        model = zero_logvar_model(4)
        model.mu_head.weights[:] = 0.0
        model.mu_head.biases[:] = 0.0
        x = np.array([0.5, 0.5, 0.5, 0.5])
        trace = forward(model, x, 0.0)
        parts = loss(trace, x, 0.0, LossWeights(gamma=1.0))
        assert parts.kld == 0.0

    def test_hand_arithmetic_case(self):
        # recon = mean of four 1^2 = 1; cal = 2^2 = 4; total = 5
        model = random_model(2)
        x = np.zeros(4)
        trace = forward(model, x, 0.0)
        trace.x_recon[:] = 1.0
        y = trace.z[0, 0] - 2.0
        parts = loss(trace, x, y, LossWeights())
        assert parts.recon == pytest.approx(1.0, rel=1e-15)
        assert parts.cal == pytest.approx(4.0, rel=1e-15)
        assert parts.total == pytest.approx(5.0, rel=1e-15)

    def test_kld_nonnegative_property(self):
        rng = np.random.default_rng(8)
        model = random_model(8)
        for _ in range(100):
            x = rng.uniform(0, 1, size=4)
            trace = forward(model, x, rng.standard_normal())
            parts = loss(trace, x, rng.uniform(0, 1), LossWeights(gamma=1.0))
            assert parts.kld >= 0.0

    def test_batch_mean_semantics(self):
        model = random_model(6)
        rng = np.random.default_rng(6)
        xb = rng.uniform(0, 1, size=(5, 4))
        yb = rng.uniform(0, 1, size=5)
        eps = rng.standard_normal(5)
        w = LossWeights(alpha=0.7, beta=1.3, gamma=0.4)
        batch_parts = loss(forward(model, xb, eps), xb, yb, w)
        singles = [loss(forward(model, xb[k], eps[k]), xb[k], yb[k], w)
                   for k in range(5)]
        assert batch_parts.total == pytest.approx(
            np.mean([p.total for p in singles]), rel=1e-12)


class TestBackward:
    def test_zero_noise_gamma_zero_freezes_logvar(self):
        model = random_model(9)
        x = np.array([0.2, 0.9, 0.4, 0.6])
        trace = forward(model, x, 0.0)
        tape = backward(model, trace, x, 0.3, LossWeights(gamma=0.0))
        assert (tape.weight_grad("logvar_head") == 0).all()
        assert (tape.bias_grad("logvar_head") == 0).all()

    def test_perfect_fit_zero_gradients(self):
        model = random_model(10)
        x = np.array([0.5, 0.1, 0.8, 0.3])
        trace = forward(model, x, 0.0)
        tape = backward(model, trace, trace.x_recon[0], trace.z[0, 0],
                        LossWeights(gamma=0.0))
        for name in LAYER_NAMES:
            assert (tape.weight_grad(name) == 0).all()
            assert (tape.bias_grad(name) == 0).all()

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("gamma", [0.0, 1.0])
    def test_gradients_match_finite_differences(self, seed, gamma):
        rng = np.random.default_rng(100 + seed)
        model = random_model(seed)
        x = rng.uniform(0, 1, size=4)
        y = rng.uniform(0, 1)
        eps = rng.standard_normal()
        w = LossWeights(alpha=1.0, beta=1.0, gamma=gamma)

        trace = forward(model, x, eps)
        tape = backward(model, trace, x, y, w)

        def total():
            return loss(forward(model, x, eps), x, y, w).total

        for name, layer in model.layers().items():
            fd_w, fd_b = finite_difference_gradients(
                total, [layer.weights, layer.biases])
            for a, b in zip(tape.weight_grad(name).ravel(), fd_w.ravel()):
                assert relative_error(a, b) < 1e-5, name
            for a, b in zip(tape.bias_grad(name), fd_b):
                assert relative_error(a, b) < 1e-5, name

    def test_batch_gradients_are_mean_of_singles(self):
        model = random_model(12)
        rng = np.random.default_rng(12)
        xb = rng.uniform(0, 1, size=(4, 4))
        yb = rng.uniform(0, 1, size=4)
        eps = rng.standard_normal(4)
        w = LossWeights(alpha=1.0, beta=2.0, gamma=0.5)
        tape_b = backward(model, forward(model, xb, eps), xb, yb, w)
        accum = {name: np.zeros_like(model.layers()[name].weights)
                 for name in LAYER_NAMES}
        for k in range(4):
            t = backward(model, forward(model, xb[k], eps[k]), xb[k], yb[k], w)
            for name in LAYER_NAMES:
                accum[name] += t.weight_grad(name) / 4.0
        for name in LAYER_NAMES:
            assert np.allclose(tape_b.weight_grad(name), accum[name],
                               rtol=1e-10, atol=1e-14)


class TestPredict:
    def test_equals_zero_noise_forward(self):
        model = random_model(13)
        x = np.array([0.25, 0.5, 0.75, 0.9])
        y_pred, x_recon = predict(model, x)
        trace = forward(model, x, 0.0)
        assert y_pred == trace.z[0, 0]
        assert np.array_equal(x_recon, trace.x_recon[0])

    def test_repeated_calls_identical(self):
        model = random_model(14)
        x = np.array([0.4, 0.1, 0.6, 0.3])
        a = predict(model, x)
        b = predict(model, x)
        assert a[0] == b[0]
        assert np.array_equal(a[1], b[1])

    def test_batch_shape(self):
        model = random_model(15)
        xb = np.random.default_rng(15).uniform(0, 1, size=(7, 4))
        y_pred, x_recon = predict(model, xb)
        assert y_pred.shape == (7,)
        assert x_recon.shape == (7, 4)
