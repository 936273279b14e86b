"""Variational circuit forecasters: RX/CNOT layers and the Ising-gate variant.

Both encode the window by angle rotations (scale pi on min-max normalized
inputs), measure Z on qubit 0 and map the expectation to a prediction via
(1 + <Z>)/2 so the output lives on the normalized target range.  Training
uses exact parameter-shift gradients of the MSE loss.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..qsim import Circuit, Gate, GateKind, circuit_jacobians, run_circuit_states
from .base import TrainedModel
from .training import EarlyStopPolicy, fit_mse

ENCODING_SCALE = np.pi


def qnn_build_circuit(n_qubits: int, n_layers: int) -> Circuit:
    """RX angle encoding, then per layer RX on every qubit and a CNOT chain."""
    circuit = Circuit(n_qubits)
    for i in range(n_qubits):
        circuit.add_data(Gate(GateKind.RX, (i,)), i, scale=ENCODING_SCALE)
    param = 0
    for _ in range(n_layers):
        for q in range(n_qubits):
            circuit.add_param(Gate(GateKind.RX, (q,)), param)
            param += 1
        for q in range(n_qubits - 1):
            circuit.add_fixed(Gate(GateKind.CNOT, (q, q + 1)))
    return circuit


def _ring_pairs(n_qubits: int) -> list[tuple[int, int]]:
    if n_qubits < 2:
        raise ConfigurationError("Ising layers need at least 2 qubits")
    if n_qubits == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n_qubits) for i in range(n_qubits)]


def qnn_ising_build_circuit(n_qubits: int, n_layers: int) -> Circuit:
    """RX+RY+RZ angle encoding, then layers of XX/YY/ZZ Ising gates on the ring."""
    circuit = Circuit(n_qubits)
    for i in range(n_qubits):
        for kind in (GateKind.RX, GateKind.RY, GateKind.RZ):
            circuit.add_data(Gate(kind, (i,)), i, scale=ENCODING_SCALE)
    param = 0
    pairs = _ring_pairs(n_qubits)
    for _ in range(n_layers):
        for kind in (GateKind.ISING_XX, GateKind.ISING_YY, GateKind.ISING_ZZ):
            for pair in pairs:
                circuit.add_param(Gate(kind, pair), param)
                param += 1
    return circuit


class CircuitRegressor:
    """Trainable over a circuit's PARAM angles with the (1 + <Z0>)/2 output map."""

    def __init__(self, circuit: Circuit, seed: int) -> None:
        self.circuit = circuit
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
        self.params = rng.normal(0.0, 0.1, size=circuit.num_params)

    def get_params(self) -> np.ndarray:
        return self.params

    def set_params(self, flat: np.ndarray) -> None:
        self.params = np.asarray(flat, dtype=np.float64).copy()

    def _z0(self, x: np.ndarray) -> np.ndarray:
        states = run_circuit_states(self.circuit, self.params, x)
        probs = np.abs(states) ** 2
        sign = _z0_signs(self.circuit.num_qubits)
        return probs @ sign

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (1.0 + self._z0(np.asarray(x, dtype=np.float64))) / 2.0

    def loss_and_grad(self, x: np.ndarray, y: np.ndarray):
        values, d_params, _ = circuit_jacobians(self.circuit, self.params, x, [(0,)])
        pred = (1.0 + values[:, 0]) / 2.0
        res = pred - np.asarray(y, dtype=np.float64)
        loss = float(np.mean(res**2))
        grad = res @ d_params[:, 0, :] / len(res)
        return loss, grad


def _z0_signs(num_qubits: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    return 1.0 - 2.0 * ((idx >> (num_qubits - 1)) & 1)


class QnnModel(TrainedModel):
    def __init__(self, family: str, regressor: CircuitRegressor, window: int, fit_result) -> None:
        super().__init__(family, window_length=window)
        self.regressor = regressor
        self.trace = fit_result.trace
        self.epochs_trained = fit_result.epochs_trained
        self.diverged = fit_result.diverged

    def predict_next(self, window) -> float:
        window = np.asarray(window, dtype=np.float64)
        return float(self.regressor.predict(window[None, :])[0])


def fit_qnn_windows(
    x, y, hp: dict, seed: int, ising: bool, policy: EarlyStopPolicy | None = None
) -> QnnModel:
    build = qnn_ising_build_circuit if ising else qnn_build_circuit
    circuit = build(hp["n"], hp["layers"])
    regressor = CircuitRegressor(circuit, seed)
    policy = policy or EarlyStopPolicy.from_hyperparameters(hp)
    result = fit_mse(regressor, x, y, lr=hp["lr"], policy=policy)
    family = "QNN_ISING" if ising else "QNN"
    return QnnModel(family, regressor, hp["n"], result)
