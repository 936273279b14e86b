"""Boltzmann-style forecaster whose hidden layer is annealed from a QUBO.

For a window v the QUBO gets diagonal entries Q_jj = sum_i v_i * W_vh[i][j]
and off-diagonal entries Q_jk = W_hh[j][k]; simulated annealing samples the
hidden configuration and the soft hidden values (per-bit means over the
reads) feed a linear output head.  Learning is a delta rule: the prediction
error, the learning rate and the hidden values update the output head and
both weight matrices, with credit pushed through the output weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..anneal import AnnealSchedule, Qubo, simulated_annealing
from ..errors import UsageError
from ..pipeline import early_stop_check, mse
from .base import TrainedModel, derive_seed
from .training import EarlyStopPolicy

_PREDICT_STREAM = 0x5EED


@dataclass
class QdbmWeights:
    """Visible-to-hidden and hidden-to-hidden couplings plus the linear head."""

    w_vh: np.ndarray
    w_hh: np.ndarray
    w_out: np.ndarray
    b_out: float

    def __post_init__(self) -> None:
        n_hidden = self.w_vh.shape[1]
        if self.w_hh.shape != (n_hidden, n_hidden):
            raise UsageError("w_hh must be square over the hidden units")
        if not np.allclose(self.w_hh, self.w_hh.T, atol=1e-12, rtol=0.0):
            raise UsageError("w_hh must be symmetric")
        if np.any(np.diag(self.w_hh) != 0.0):
            raise UsageError("w_hh must have a zero diagonal")
        if self.w_out.shape != (n_hidden,):
            raise UsageError("w_out must match the hidden size")

    @property
    def n_visible(self) -> int:
        return self.w_vh.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.w_vh.shape[1]

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.w_vh))
            and np.all(np.isfinite(self.w_hh))
            and np.all(np.isfinite(self.w_out))
            and np.isfinite(self.b_out)
        )

    def copy(self) -> "QdbmWeights":
        return QdbmWeights(self.w_vh.copy(), self.w_hh.copy(), self.w_out.copy(), float(self.b_out))


def qdbm_qubo(weights: QdbmWeights, window) -> Qubo:
    """Diagonal from inputs times W_vh columns, off-diagonal from W_hh."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (weights.n_visible,):
        raise UsageError(f"expected window of length {weights.n_visible}, got {window.shape}")
    q = weights.w_hh.copy()
    np.fill_diagonal(q, window @ weights.w_vh)
    return Qubo(q)


def qdbm_forward(weights: QdbmWeights, window, schedule: AnnealSchedule, seed: int):
    """Soft hidden values (per-bit read means) and the linear prediction."""
    qubo = qdbm_qubo(weights, window)
    samples = simulated_annealing(qubo, schedule, seed)
    bits = np.asarray([s.bits for s in samples], dtype=np.float64)
    h = bits.mean(axis=0)
    prediction = float(weights.w_out @ h + weights.b_out)
    return prediction, h


def qdbm_update(weights: QdbmWeights, window, h, target: float, prediction: float,
                lr: float) -> QdbmWeights:
    """Delta-rule step; all increments use the pre-step output weights."""
    window = np.asarray(window, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    delta = float(target) - float(prediction)
    w_out = weights.w_out  # snapshot: credit assignment uses pre-update head
    new_w_out = w_out + lr * delta * h
    new_b_out = weights.b_out + lr * delta
    new_w_vh = weights.w_vh + lr * delta * np.outer(window, w_out * h)
    pair = (w_out[:, None] + w_out[None, :]) / 2.0
    hh_step = lr * delta * pair * np.outer(h, h)
    np.fill_diagonal(hh_step, 0.0)
    return QdbmWeights(new_w_vh, weights.w_hh + hh_step, new_w_out, float(new_b_out))


class QdbmModel(TrainedModel):
    def __init__(self, weights: QdbmWeights, schedule: AnnealSchedule, seed: int,
                 window: int) -> None:
        super().__init__("QDBM", window_length=window)
        self.weights = weights
        self.schedule = schedule
        self.seed = seed

    def predict_next(self, window) -> float:
        if not self.weights.is_finite():
            return float("nan")
        prediction, _ = qdbm_forward(
            self.weights, window, self.schedule, derive_seed(self.seed, _PREDICT_STREAM)
        )
        return prediction


def init_weights(n_visible: int, n_hidden: int, rng: np.random.Generator,
                 b_out: float = 0.5) -> QdbmWeights:
    w_vh = rng.normal(0.0, 0.1, size=(n_visible, n_hidden))
    a = rng.normal(0.0, 0.1, size=(n_hidden, n_hidden))
    w_hh = (a + a.T) / 2.0
    np.fill_diagonal(w_hh, 0.0)
    w_out = rng.normal(0.0, 0.1, size=n_hidden)
    return QdbmWeights(w_vh, w_hh, w_out, float(b_out))


def fit_qdbm_windows(x, y, hp: dict, seed: int,
                     policy: EarlyStopPolicy | None = None) -> QdbmModel:
    """Per-sample delta-rule passes with a validation trace and early stopping."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    policy = policy or EarlyStopPolicy.from_hyperparameters(hp)
    schedule = AnnealSchedule(sweeps=hp["sweeps"], num_reads=hp["reads"])
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))

    n_val = max(1, len(x) // 10) if len(x) >= 2 else 0
    x_train, y_train = (x[:-n_val], y[:-n_val]) if n_val else (x, y)
    x_val, y_val = (x[-n_val:], y[-n_val:]) if n_val else (x, y)

    weights = init_weights(x.shape[1], hp["hidden"], rng, b_out=float(np.mean(y_train)))
    model = QdbmModel(weights, schedule, seed, window=x.shape[1])

    best_weights = weights.copy()
    best_loss = np.inf
    lr = hp["lr"]
    for epoch in range(policy.max_epochs):
        order = rng.permutation(len(x_train))
        for k in order:
            sample_seed = derive_seed(seed, 1, int(k))
            prediction, h = qdbm_forward(weights, x_train[k], schedule, sample_seed)
            weights = qdbm_update(weights, x_train[k], h, y_train[k], prediction, lr)
            if not weights.is_finite():
                model.diverged = True
                break
        if model.diverged:
            break
        val_preds = [
            qdbm_forward(weights, x_val[k], schedule, derive_seed(seed, 2, int(k)))[0]
            for k in range(len(x_val))
        ]
        if not np.all(np.isfinite(val_preds)):
            model.diverged = True
            break
        val_loss = float(mse(y_val, val_preds))
        model.trace.append(val_loss)
        model.epochs_trained = epoch + 1
        if val_loss < best_loss:
            best_loss = val_loss
            best_weights = weights.copy()
        stop, _ = early_stop_check(model.trace, policy.patience, policy.min_delta)
        if stop:
            break

    model.weights = best_weights if np.isfinite(best_loss) else weights
    return model
