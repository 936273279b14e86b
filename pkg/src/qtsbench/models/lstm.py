"""Classical LSTM regressor trained by backpropagation through time.

The cell follows the standard gate equations over the concatenation
[h_prev; x_t]; the network unrolls one cell over the input window and maps
the final hidden state through a linear head.  Forward and backward passes
are batched over windows with plain numpy matmuls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .base import TrainedModel
from .training import EarlyStopPolicy, fit_mse

GATE_NAMES = ("input", "forget", "output", "candidate")


@dataclass
class LstmCellParams:
    """Per-gate weights over [h_prev; x_t] plus biases; hidden size h."""

    w_i: np.ndarray
    w_f: np.ndarray
    w_o: np.ndarray
    w_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    def __post_init__(self) -> None:
        h = self.w_i.shape[0]
        for w in (self.w_i, self.w_f, self.w_o, self.w_g):
            if w.ndim != 2 or w.shape[0] != h or w.shape != self.w_i.shape:
                raise UsageError("gate weight matrices must share shape (h, h + input)")
        if self.w_i.shape[1] <= h:
            raise UsageError("gate weights must cover hidden state plus at least one input")
        for b in (self.b_i, self.b_f, self.b_o, self.b_g):
            if b.shape != (h,):
                raise UsageError("gate biases must have shape (h,)")

    @property
    def hidden(self) -> int:
        return self.w_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_i.shape[1] - self.hidden


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_cell_step(params: LstmCellParams, x_t, h_prev, c_prev):
    """One cell update: returns (h_t, c_t) for a single sample."""
    x_t = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    h = params.hidden
    if h_prev.shape != (h,) or c_prev.shape != (h,) or x_t.shape != (params.input_size,):
        raise UsageError(
            f"expected h_prev/c_prev of shape ({h},) and x_t of shape ({params.input_size},)"
        )
    cat = np.concatenate([h_prev, x_t])
    f = _sigmoid(params.w_f @ cat + params.b_f)
    i = _sigmoid(params.w_i @ cat + params.b_i)
    o = _sigmoid(params.w_o @ cat + params.b_o)
    g = np.tanh(params.w_g @ cat + params.b_g)
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


class LstmRegressor:
    """Batched window-to-scalar LSTM with a linear readout (Trainable)."""

    def __init__(self, window: int, hidden: int, seed: int) -> None:
        self.window = window
        self.hidden = hidden
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
        k = 1.0 / np.sqrt(hidden)
        shape = (hidden, hidden + 1)
        self.weights = {name: rng.uniform(-k, k, size=shape) for name in GATE_NAMES}
        self.biases = {name: np.zeros(hidden) for name in GATE_NAMES}
        self.biases["forget"] = np.ones(hidden)  # standard forget-gate bias
        self.w_y = rng.uniform(-k, k, size=hidden)
        self.b_y = 0.0

    # --- flat parameter interface -------------------------------------
    def get_params(self) -> np.ndarray:
        parts = [self.weights[n].ravel() for n in GATE_NAMES]
        parts += [self.biases[n] for n in GATE_NAMES]
        parts += [self.w_y, [self.b_y]]
        return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in parts])

    def set_params(self, flat: np.ndarray) -> None:
        h = self.hidden
        size = h * (h + 1)
        pos = 0
        for n in GATE_NAMES:
            self.weights[n] = flat[pos : pos + size].reshape(h, h + 1).copy()
            pos += size
        for n in GATE_NAMES:
            self.biases[n] = flat[pos : pos + h].copy()
            pos += h
        self.w_y = flat[pos : pos + h].copy()
        pos += h
        self.b_y = float(flat[pos])

    def cell_params(self) -> LstmCellParams:
        return LstmCellParams(
            w_i=self.weights["input"],
            w_f=self.weights["forget"],
            w_o=self.weights["output"],
            w_g=self.weights["candidate"],
            b_i=self.biases["input"],
            b_f=self.biases["forget"],
            b_o=self.biases["output"],
            b_g=self.biases["candidate"],
        )

    # --- forward / backward --------------------------------------------
    def forward(self, x: np.ndarray, keep: bool = False):
        x = np.asarray(x, dtype=np.float64)
        batch = x.shape[0]
        h = np.zeros((batch, self.hidden))
        c = np.zeros((batch, self.hidden))
        caches = []
        for t in range(x.shape[1]):
            cat = np.column_stack([h, x[:, t]])
            f = _sigmoid(cat @ self.weights["forget"].T + self.biases["forget"])
            i = _sigmoid(cat @ self.weights["input"].T + self.biases["input"])
            o = _sigmoid(cat @ self.weights["output"].T + self.biases["output"])
            g = np.tanh(cat @ self.weights["candidate"].T + self.biases["candidate"])
            c_next = f * c + i * g
            tanh_c = np.tanh(c_next)
            if keep:
                caches.append((cat, f, i, o, g, c, tanh_c))
            h = o * tanh_c
            c = c_next
        pred = h @ self.w_y + self.b_y
        return (pred, h, caches) if keep else pred

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def loss_and_grad(self, x: np.ndarray, y: np.ndarray):
        y = np.asarray(y, dtype=np.float64)
        pred, h_last, caches = self.forward(x, keep=True)
        batch = len(y)
        res = pred - y
        loss = float(np.mean(res**2))
        d_pred = 2.0 * res / batch

        grads_w = {n: np.zeros_like(self.weights[n]) for n in GATE_NAMES}
        grads_b = {n: np.zeros_like(self.biases[n]) for n in GATE_NAMES}
        d_wy = d_pred @ h_last
        d_by = float(np.sum(d_pred))
        dh = d_pred[:, None] * self.w_y[None, :]
        dc = np.zeros_like(dh)
        for t in range(len(caches) - 1, -1, -1):
            cat, f, i, o, g, c_prev, tanh_c = caches[t]
            d_pre_o = dh * tanh_c * o * (1 - o)
            dc = dc + dh * o * (1 - tanh_c**2)
            d_pre_f = dc * c_prev * f * (1 - f)
            d_pre_i = dc * g * i * (1 - i)
            d_pre_g = dc * i * (1 - g**2)
            dcat = np.zeros_like(cat)
            for name, d_pre in (
                ("forget", d_pre_f),
                ("input", d_pre_i),
                ("output", d_pre_o),
                ("candidate", d_pre_g),
            ):
                grads_w[name] += d_pre.T @ cat
                grads_b[name] += d_pre.sum(axis=0)
                dcat += d_pre @ self.weights[name]
            dh = dcat[:, : self.hidden]
            dc = dc * f

        flat = [grads_w[n].ravel() for n in GATE_NAMES]
        flat += [grads_b[n] for n in GATE_NAMES]
        flat += [d_wy, [d_by]]
        return loss, np.concatenate([np.asarray(p).ravel() for p in flat])


class LstmModel(TrainedModel):
    def __init__(self, network: LstmRegressor, fit_result) -> None:
        super().__init__("LSTM", window_length=network.window)
        self.network = network
        self.trace = fit_result.trace
        self.epochs_trained = fit_result.epochs_trained
        self.diverged = fit_result.diverged

    def predict_next(self, window) -> float:
        window = np.asarray(window, dtype=np.float64)
        return float(self.network.predict(window[None, :])[0])


def fit_lstm_windows(x, y, hp: dict, seed: int, policy: EarlyStopPolicy | None = None) -> LstmModel:
    network = LstmRegressor(window=hp["n"], hidden=hp["hidden"], seed=seed)
    policy = policy or EarlyStopPolicy.from_hyperparameters(hp)
    result = fit_mse(network, x, y, lr=hp["lr"], policy=policy)
    return LstmModel(network, result)
