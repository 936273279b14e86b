"""QDBM: QUBO construction, annealed hidden inference, delta-rule updates."""

import numpy as np
import pytest

from qtsbench.anneal import AnnealSchedule, brute_force_minimum
from qtsbench.errors import UsageError
from qtsbench.models import QdbmWeights, qdbm_forward, qdbm_qubo, qdbm_update
from qtsbench.models.qdbm import init_weights


def make_weights(w_vh, w_hh, w_out, b_out):
    return QdbmWeights(
        np.asarray(w_vh, dtype=float),
        np.asarray(w_hh, dtype=float),
        np.asarray(w_out, dtype=float),
        float(b_out),
    )


class TestQuboConstruction:
    def test_diagonal_from_inputs(self):
        weights = make_weights([[1.0, 2.0], [3.0, 4.0]], np.zeros((2, 2)), [0.0, 0.0], 0.0)
        qubo = qdbm_qubo(weights, [1.0, 0.5])
        np.testing.assert_allclose(np.diag(qubo.coefficients), [1.0 + 1.5, 2.0 + 2.0])

    def test_off_diagonal_from_w_hh(self):
        w_hh = np.array([[0.0, -0.7], [-0.7, 0.0]])
        weights = make_weights(np.zeros((1, 2)), w_hh, [0.0, 0.0], 0.0)
        qubo = qdbm_qubo(weights, [0.0])
        assert qubo.coefficients[0, 1] == -0.7
        assert qubo.coefficients[1, 0] == -0.7

    def test_validation(self):
        with pytest.raises(UsageError):
            make_weights(np.zeros((2, 2)), np.array([[0.0, 1.0], [2.0, 0.0]]), [0, 0], 0.0)
        with pytest.raises(UsageError):
            make_weights(np.zeros((2, 2)), np.eye(2), [0, 0], 0.0)


class TestForward:
    def test_zero_weights_predicts_bias(self):
        weights = make_weights(np.zeros((3, 2)), np.zeros((2, 2)), [0.0, 0.0], 0.5)
        prediction, h = qdbm_forward(weights, [0.2, 0.4, 0.6], AnnealSchedule(), seed=1)
        assert prediction == 0.5
        qubo = qdbm_qubo(weights, [0.2, 0.4, 0.6])
        np.testing.assert_allclose(qubo.coefficients, 0.0)

    def test_single_hidden_strong_negative(self):
        weights = make_weights([[-5.0]], np.zeros((1, 1)), [0.8], 0.1)
        prediction, h = qdbm_forward(weights, [1.0], AnnealSchedule(), seed=2)
        # brute force agrees: energy -5 at x=1 beats 0 at x=0
        assert brute_force_minimum(qdbm_qubo(weights, [1.0])).bits == (1,)
        np.testing.assert_allclose(h, [1.0])
        assert prediction == pytest.approx(0.9)

    def test_two_hidden_modal_matches_brute_force(self):
        w_hh = np.array([[0.0, 4.0], [4.0, 0.0]])  # strong repulsion
        weights = make_weights([[-6.0, -5.0]], w_hh, [0.0, 0.0], 0.0)
        window = [1.0]
        qubo = qdbm_qubo(weights, window)
        exact = brute_force_minimum(qubo)
        _, h = qdbm_forward(weights, window, AnnealSchedule(), seed=3)
        modal = tuple(int(round(v)) for v in h)
        assert modal == exact.bits == (1, 0)

    def test_hidden_inference_matches_brute_force_mostly(self):
        rng = np.random.default_rng(55)
        schedule = AnnealSchedule(final_temperature=0.02)
        hits = 0
        trials = 100
        for trial in range(trials):
            n_vis, n_hid = 3, int(rng.integers(2, 11))
            weights = init_weights(n_vis, n_hid, rng)
            weights = QdbmWeights(weights.w_vh * 10, weights.w_hh * 10, weights.w_out, 0.0)
            window = rng.uniform(0, 1, size=n_vis)
            qubo = qdbm_qubo(weights, window)
            samples_exact = brute_force_minimum(qubo)
            _, h = qdbm_forward(weights, window, schedule, seed=trial)
            modal = tuple(int(round(v)) for v in h)
            if modal == samples_exact.bits:
                hits += 1
        assert hits >= 95


class TestUpdate:
    def test_zero_delta_no_change(self):
        rng = np.random.default_rng(1)
        weights = init_weights(2, 3, rng)
        updated = qdbm_update(weights, [0.1, 0.2], [1.0, 0.0, 1.0], target=0.5,
                              prediction=0.5, lr=0.1)
        np.testing.assert_array_equal(updated.w_vh, weights.w_vh)
        np.testing.assert_array_equal(updated.w_hh, weights.w_hh)
        np.testing.assert_array_equal(updated.w_out, weights.w_out)
        assert updated.b_out == weights.b_out

    def test_zero_lr_no_change(self):
        rng = np.random.default_rng(2)
        weights = init_weights(2, 3, rng)
        updated = qdbm_update(weights, [0.1, 0.2], [1.0, 0.0, 1.0], target=0.9,
                              prediction=0.1, lr=0.0)
        np.testing.assert_array_equal(updated.w_vh, weights.w_vh)
        np.testing.assert_array_equal(updated.w_out, weights.w_out)

    def test_update_preserves_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(3)
        weights = init_weights(3, 4, rng)
        updated = qdbm_update(weights, rng.uniform(size=3), rng.uniform(size=4),
                              target=1.0, prediction=0.2, lr=0.1)
        np.testing.assert_allclose(updated.w_hh, updated.w_hh.T)
        np.testing.assert_allclose(np.diag(updated.w_hh), 0.0)

    def test_repeated_updates_shrink_error(self):
        # single visible, single hidden unit pinned on by a strong negative field
        weights = make_weights([[-5.0]], np.zeros((1, 1)), [0.2], 0.3)
        window = np.array([1.0])
        target = 0.9
        schedule = AnnealSchedule()
        errors = []
        for step in range(10):
            prediction, h = qdbm_forward(weights, window, schedule, seed=7)
            errors.append(abs(target - prediction))
            weights = qdbm_update(weights, window, h, target, prediction, lr=0.05)
        assert all(errors[k + 1] < errors[k] for k in range(len(errors) - 1))
