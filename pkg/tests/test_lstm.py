"""LSTM cell semantics and backpropagation gradient checks."""

import numpy as np
import pytest

from qtsbench.errors import UsageError
from qtsbench.models import LstmCellParams, LstmRegressor, lstm_cell_step

from util import numeric_gradient, relative_error


def zero_cell(h, k=1):
    z = np.zeros((h, h + k))
    b = np.zeros(h)
    return LstmCellParams(z.copy(), z.copy(), z.copy(), z.copy(), b.copy(), b.copy(), b.copy(), b.copy())


class TestCellStep:
    def test_all_zero_weights(self):
        params = zero_cell(1)
        h_t, c_t = lstm_cell_step(params, [0.0], np.zeros(1), np.ones(1))
        assert c_t[0] == pytest.approx(0.5)
        assert h_t[0] == pytest.approx(0.5 * np.tanh(0.5))

    def test_zero_inputs_any_weights(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(2, 3))
        params = LstmCellParams(w, w.copy(), w.copy(), w.copy(),
                                np.zeros(2), np.zeros(2), np.zeros(2), np.zeros(2))
        h_t, c_t = lstm_cell_step(params, [0.0], np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(c_t, 0.0)
        np.testing.assert_allclose(h_t, 0.0)

    def test_shape_mismatch(self):
        params = zero_cell(2)
        with pytest.raises(UsageError):
            lstm_cell_step(params, [0.0], np.zeros(3), np.zeros(2))

    def test_matches_batched_network_step(self):
        network = LstmRegressor(window=1, hidden=3, seed=5)
        params = network.cell_params()
        x = np.array([[0.37]])
        pred_net, h_net, _ = network.forward(x, keep=True)
        h_cell, _ = lstm_cell_step(params, [0.37], np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(h_net[0], h_cell, atol=1e-12)


class TestGradients:
    def _check(self, window, hidden, seed, n_samples=6):
        rng = np.random.default_rng(seed)
        network = LstmRegressor(window=window, hidden=hidden, seed=seed)
        x = rng.uniform(0, 1, size=(n_samples, window))
        y = rng.uniform(0, 1, size=n_samples)
        _, grad = network.loss_and_grad(x, y)
        theta0 = network.get_params().copy()

        def loss_at(theta):
            network.set_params(theta)
            loss, _ = network.loss_and_grad(x, y)
            return loss

        fd = numeric_gradient(loss_at, theta0, eps=1e-5)
        network.set_params(theta0)
        assert relative_error(grad, fd) < 1e-6

    def test_single_step_cell_gradients(self):
        # sequence length 1 exercises every cell weight without recurrence
        self._check(window=1, hidden=3, seed=11)

    def test_multi_step_bptt_gradients(self):
        self._check(window=5, hidden=4, seed=13)

    def test_many_random_instances(self):
        for seed in range(8):
            self._check(window=3, hidden=2, seed=100 + seed, n_samples=4)
