"""QLSTM cell semantics and hybrid parameter-shift/backprop gradients."""

import numpy as np
import pytest

from qtsbench.errors import ConfigurationError
from qtsbench.models import QlstmNetwork, qlstm_cell_step
from qtsbench.models.qlstm import build_cell

from util import numeric_gradient, relative_error

SIG1 = 1.0 / (1.0 + np.exp(-1.0))


class TestCellStep:
    def test_identity_circuits_closed_form(self):
        cell = build_cell(hidden=2, n_qubits=3, n_layers=1, input_size=1, seed=0)
        for name in cell.thetas:
            cell.thetas[name] = np.zeros_like(cell.thetas[name])
        c_prev = np.array([0.3, -0.2])
        h_t, c_t = qlstm_cell_step(cell, [0.0], np.zeros(2), c_prev)
        # every VQC output is <Z> = 1, so f = i = o = sigma(1), g = tanh(1)
        expected_c = SIG1 * c_prev + SIG1 * np.tanh(1.0)
        np.testing.assert_allclose(c_t, expected_c, atol=1e-12)
        np.testing.assert_allclose(h_t, SIG1 * np.tanh(expected_c), atol=1e-12)

    def test_single_qubit_cell(self):
        # h=1 with a one-qubit circuit: both inputs encode onto qubit 0
        cell = build_cell(hidden=1, n_qubits=1, n_layers=1, input_size=1, seed=1)
        h_t, c_t = qlstm_cell_step(cell, [0.4], np.zeros(1), np.zeros(1))
        assert h_t.shape == (1,) and c_t.shape == (1,)
        assert np.all(np.isfinite(h_t))

    def test_hidden_exceeding_qubits_rejected(self):
        with pytest.raises(ConfigurationError):
            build_cell(hidden=3, n_qubits=2, n_layers=1, input_size=1, seed=0)

    def test_matches_batched_network(self):
        network = QlstmNetwork(window=1, hidden=2, n_qubits=3, n_layers=1, seed=9)
        x = np.array([[0.6]])
        _, h_net, _ = network.forward(x, keep=True)
        h_cell, _ = qlstm_cell_step(network.cell, [0.6], np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(h_net[0], h_cell, atol=1e-12)


class TestGradients:
    def _check(self, window, hidden, n_qubits, seed, tol=1e-4, n_samples=3):
        rng = np.random.default_rng(seed)
        network = QlstmNetwork(window=window, hidden=hidden, n_qubits=n_qubits,
                               n_layers=1, seed=seed)
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
        assert relative_error(grad, fd) < tol

    def test_scalar_cell_gradient(self):
        # h=1, one qubit per VQC: the cell reduces to a scalar recurrence
        self._check(window=2, hidden=1, n_qubits=1, seed=3)

    def test_multi_qubit_gradient(self):
        self._check(window=3, hidden=2, n_qubits=3, seed=5)

    def test_several_random_instances(self):
        for seed in range(4):
            self._check(window=2, hidden=2, n_qubits=2, seed=40 + seed, n_samples=2)

    def test_forget_path_gradient_zero_when_c_prev_zero(self):
        # single step from c_0 = 0: the forget VQC cannot influence the loss
        network = QlstmNetwork(window=1, hidden=2, n_qubits=3, n_layers=1, seed=7)
        x = np.array([[0.8], [0.2]])
        y = np.array([0.5, 0.1])
        _, grad = network.loss_and_grad(x, y)
        p = network.cell.circuit.num_params
        forget_theta_grad = grad[:p]  # forget gate owns the first theta block
        np.testing.assert_array_equal(forget_theta_grad, 0.0)
