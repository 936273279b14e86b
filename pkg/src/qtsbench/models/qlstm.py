"""LSTM cell whose four gate maps are variational quantum circuits.

Each gate circuit angle-encodes the concatenation [h_prev; x_t] (input i on
qubit i mod n_qubits, scale pi), applies RX+CNOT variational layers and is
read out as per-qubit Z expectations trimmed to the hidden size.  A trainable
affine rescale per gate sits between the raw circuit outputs and the sigmoid
or tanh activations, and a classical linear head maps the final hidden state
to the forecast.

Gradients are hybrid: parameter-shift Jacobians for every circuit angle
(both trainable and encoding angles, the latter carrying the recurrent
dependence on h_{t-1}) chained with ordinary backpropagation through the
cell-state recurrence and the classical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, UsageError
from ..qsim import Circuit, Gate, GateKind, circuit_jacobians, expectations_batch, run_circuit_states
from .base import TrainedModel
from .qnn import ENCODING_SCALE
from .training import EarlyStopPolicy, fit_mse

GATE_NAMES = ("forget", "input", "candidate", "output")


def qlstm_build_vqc(n_inputs: int, n_qubits: int, n_layers: int) -> Circuit:
    """QNN-style gate circuit over the concatenated cell inputs."""
    circuit = Circuit(n_qubits)
    for i in range(n_inputs):
        circuit.add_data(Gate(GateKind.RX, (i % n_qubits,)), i, scale=ENCODING_SCALE)
    param = 0
    for _ in range(n_layers):
        for q in range(n_qubits):
            circuit.add_param(Gate(GateKind.RX, (q,)), param)
            param += 1
        for q in range(n_qubits - 1):
            circuit.add_fixed(Gate(GateKind.CNOT, (q, q + 1)))
    return circuit


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class QlstmCell:
    """Four VQCs sharing one circuit shape, plus per-gate affine rescaling."""

    hidden: int
    n_qubits: int
    circuit: Circuit
    thetas: dict[str, np.ndarray]
    gamma: dict[str, np.ndarray] = field(default=None)
    beta: dict[str, np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        if self.hidden > self.n_qubits:
            raise ConfigurationError(
                f"hidden size {self.hidden} exceeds qubit count {self.n_qubits}"
            )
        if self.gamma is None:
            self.gamma = {name: np.ones(self.hidden) for name in GATE_NAMES}
        if self.beta is None:
            self.beta = {name: np.zeros(self.hidden) for name in GATE_NAMES}

    @property
    def input_size(self) -> int:
        return self.circuit.num_inputs - self.hidden

    def readout_terms(self) -> list[tuple[int, ...]]:
        return [(q,) for q in range(self.hidden)]

    def vqc_raw(self, name: str, inputs: np.ndarray) -> np.ndarray:
        """Per-qubit Z readouts trimmed to the hidden size, batched."""
        states = run_circuit_states(self.circuit, self.thetas[name], inputs)
        return expectations_batch(states, self.n_qubits, self.readout_terms())


def build_cell(hidden: int, n_qubits: int, n_layers: int, input_size: int,
               seed: int) -> QlstmCell:
    circuit = qlstm_build_vqc(hidden + input_size, n_qubits, n_layers)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    thetas = {name: rng.normal(0.0, 0.1, size=circuit.num_params) for name in GATE_NAMES}
    return QlstmCell(hidden=hidden, n_qubits=n_qubits, circuit=circuit, thetas=thetas)


def qlstm_cell_step(cell: QlstmCell, x_t, h_prev, c_prev):
    """One cell update for a single sample; returns (h_t, c_t)."""
    x_t = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if h_prev.shape != (cell.hidden,) or c_prev.shape != (cell.hidden,):
        raise UsageError(f"h_prev and c_prev must have shape ({cell.hidden},)")
    if x_t.shape != (cell.input_size,):
        raise UsageError(f"x_t must have shape ({cell.input_size},)")
    v = np.concatenate([h_prev, x_t])[None, :]
    raw = {name: cell.vqc_raw(name, v)[0] for name in GATE_NAMES}
    f = _sigmoid(cell.gamma["forget"] * raw["forget"] + cell.beta["forget"])
    i = _sigmoid(cell.gamma["input"] * raw["input"] + cell.beta["input"])
    o = _sigmoid(cell.gamma["output"] * raw["output"] + cell.beta["output"])
    g = np.tanh(cell.gamma["candidate"] * raw["candidate"] + cell.beta["candidate"])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


class QlstmNetwork:
    """Batched window-to-scalar QLSTM (Trainable)."""

    def __init__(self, window: int, hidden: int, n_qubits: int, n_layers: int,
                 seed: int) -> None:
        self.window = window
        self.cell = build_cell(hidden, n_qubits, n_layers, input_size=1, seed=seed)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed) + 1))
        k = 1.0 / np.sqrt(hidden)
        self.w_out = rng.uniform(-k, k, size=hidden)
        self.b_out = 0.0

    # --- flat parameter interface -------------------------------------
    def get_params(self) -> np.ndarray:
        cell = self.cell
        parts = [cell.thetas[n] for n in GATE_NAMES]
        parts += [cell.gamma[n] for n in GATE_NAMES]
        parts += [cell.beta[n] for n in GATE_NAMES]
        parts += [self.w_out, [self.b_out]]
        return np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in parts])

    def set_params(self, flat: np.ndarray) -> None:
        cell = self.cell
        p = cell.circuit.num_params
        h = cell.hidden
        pos = 0
        for n in GATE_NAMES:
            cell.thetas[n] = flat[pos : pos + p].copy()
            pos += p
        for n in GATE_NAMES:
            cell.gamma[n] = flat[pos : pos + h].copy()
            pos += h
        for n in GATE_NAMES:
            cell.beta[n] = flat[pos : pos + h].copy()
            pos += h
        self.w_out = flat[pos : pos + h].copy()
        pos += h
        self.b_out = float(flat[pos])

    # --- forward / backward --------------------------------------------
    def forward(self, x: np.ndarray, keep: bool = False):
        x = np.asarray(x, dtype=np.float64)
        batch = x.shape[0]
        cell = self.cell
        h = np.zeros((batch, cell.hidden))
        c = np.zeros((batch, cell.hidden))
        caches = []
        for t in range(x.shape[1]):
            v = np.column_stack([h, x[:, t]])
            raw = {name: cell.vqc_raw(name, v) for name in GATE_NAMES}
            f = _sigmoid(cell.gamma["forget"] * raw["forget"] + cell.beta["forget"])
            i = _sigmoid(cell.gamma["input"] * raw["input"] + cell.beta["input"])
            o = _sigmoid(cell.gamma["output"] * raw["output"] + cell.beta["output"])
            g = np.tanh(cell.gamma["candidate"] * raw["candidate"] + cell.beta["candidate"])
            c_next = f * c + i * g
            tanh_c = np.tanh(c_next)
            if keep:
                caches.append((v, raw, f, i, o, g, c, tanh_c))
            h = o * tanh_c
            c = c_next
        pred = h @ self.w_out + self.b_out
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

        cell = self.cell
        hidden = cell.hidden
        terms = cell.readout_terms()
        d_thetas = {n: np.zeros_like(cell.thetas[n]) for n in GATE_NAMES}
        d_gamma = {n: np.zeros(hidden) for n in GATE_NAMES}
        d_beta = {n: np.zeros(hidden) for n in GATE_NAMES}
        d_w_out = d_pred @ h_last
        d_b_out = float(np.sum(d_pred))

        dh = d_pred[:, None] * self.w_out[None, :]
        dc = np.zeros_like(dh)
        for t in range(len(caches) - 1, -1, -1):
            v, raw, f, i, o, g, c_prev, tanh_c = caches[t]
            d_pre = {
                "output": dh * tanh_c * o * (1 - o),
            }
            dc = dc + dh * o * (1 - tanh_c**2)
            d_pre["forget"] = dc * c_prev * f * (1 - f)
            d_pre["input"] = dc * g * i * (1 - i)
            d_pre["candidate"] = dc * i * (1 - g**2)
            dc = dc * f
            dh_prev = np.zeros((len(y), hidden))
            for name in GATE_NAMES:
                d_gamma[name] += (d_pre[name] * raw[name]).sum(axis=0)
                d_beta[name] += d_pre[name].sum(axis=0)
                d_raw = d_pre[name] * cell.gamma[name]
                _, d_theta, d_v = circuit_jacobians(
                    cell.circuit, cell.thetas[name], v, terms,
                    wrt_params=True, wrt_data=True,
                )
                d_thetas[name] += np.einsum("bk,bkp->p", d_raw, d_theta)
                dh_prev += np.einsum("bk,bki->bi", d_raw, d_v)[:, :hidden]
            dh = dh_prev

        flat = [d_thetas[n] for n in GATE_NAMES]
        flat += [d_gamma[n] for n in GATE_NAMES]
        flat += [d_beta[n] for n in GATE_NAMES]
        flat += [d_w_out, [d_b_out]]
        return loss, np.concatenate([np.asarray(p).ravel() for p in flat])


class QlstmModel(TrainedModel):
    def __init__(self, network: QlstmNetwork, fit_result) -> None:
        super().__init__("QLSTM", window_length=network.window)
        self.network = network
        self.trace = fit_result.trace
        self.epochs_trained = fit_result.epochs_trained
        self.diverged = fit_result.diverged

    def predict_next(self, window) -> float:
        window = np.asarray(window, dtype=np.float64)
        return float(self.network.predict(window[None, :])[0])


def fit_qlstm_windows(x, y, hp: dict, seed: int,
                      policy: EarlyStopPolicy | None = None) -> QlstmModel:
    network = QlstmNetwork(
        window=hp["n"], hidden=hp["hidden"], n_qubits=hp["qubits"],
        n_layers=hp["layers"], seed=seed,
    )
    policy = policy or EarlyStopPolicy.from_hyperparameters(hp)
    result = fit_mse(network, x, y, lr=hp["lr"], policy=policy)
    return QlstmModel(network, result)
