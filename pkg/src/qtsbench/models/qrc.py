"""Quantum reservoir computing: fixed random circuit, trained linear readout.

The reservoir never trains.  A window is angle-encoded into the register,
scrambled by seeded random rotations interleaved with ring CNOTs, and read
out as single-qubit Z expectations plus (optionally) all pairwise ZZ
correlators and a bias.  Only the ridge-regression readout is fitted.
"""

from __future__ import annotations

import numpy as np

from ..pipeline import mse
from ..qsim import Circuit, Gate, GateKind, expectations_batch, run_circuit_states
from .base import TrainedModel
from .qnn import ENCODING_SCALE

_FALLBACK_RIDGE = 1e-8
_ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)


def build_reservoir(window: int, n_qubits: int, depth: int, seed: int) -> Circuit:
    """Angle-encode the window on qubit (i mod n_qubits), then ``depth`` layers
    of random rotations followed by a CNOT ring."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed)))
    circuit = Circuit(n_qubits)
    for i in range(window):
        circuit.add_data(Gate(GateKind.RX, (i % n_qubits,)), i, scale=ENCODING_SCALE)
    for _ in range(depth):
        for q in range(n_qubits):
            kind = _ROTATIONS[rng.integers(len(_ROTATIONS))]
            circuit.add_fixed(Gate(kind, (q,), angle=float(rng.uniform(0.0, 2.0 * np.pi))))
        if n_qubits >= 2:
            for q in range(n_qubits):
                circuit.add_fixed(Gate(GateKind.CNOT, (q, (q + 1) % n_qubits)))
    return circuit


def feature_terms(n_qubits: int, correlators: bool = True) -> list[tuple[int, ...]]:
    terms: list[tuple[int, ...]] = [(q,) for q in range(n_qubits)]
    if correlators:
        terms += [(j, k) for j in range(n_qubits) for k in range(j + 1, n_qubits)]
    return terms


def qrc_features(reservoir: Circuit, windows, correlators: bool = True) -> np.ndarray:
    """Per-window feature rows: [<Z_q>...] ++ [<Z_j Z_k>...] ++ [1]."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 1:
        windows = windows[None, :]
    states = run_circuit_states(reservoir, [], windows)
    feats = expectations_batch(states, reservoir.num_qubits, feature_terms(reservoir.num_qubits, correlators))
    return np.hstack([feats, np.ones((len(feats), 1))])


def qrc_fit_readout(features: np.ndarray, targets, ridge: float):
    """Ridge solution of (F^T F + ridge I) w = F^T y via a dense solve.

    A singular system at ridge=0 falls back to a tiny ridge and reports the
    fallback so the run record can be flagged.
    """
    features = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    gram = features.T @ features
    rhs = features.T @ y

    def solve(lam: float):
        a = gram + lam * np.eye(gram.shape[0])
        w = np.linalg.solve(a, rhs)
        residual = np.linalg.norm(a @ w - rhs)
        ok = np.all(np.isfinite(w)) and residual <= 1e-8 * max(1.0, np.linalg.norm(rhs))
        return w, ok

    try:
        weights, ok = solve(ridge)
    except np.linalg.LinAlgError:
        weights, ok = None, False
    if not ok:
        weights, _ = solve(max(ridge, _FALLBACK_RIDGE))
        return weights, True
    return weights, False


class QrcModel(TrainedModel):
    def __init__(self, reservoir: Circuit, weights: np.ndarray, correlators: bool,
                 window: int, train_mse: float, flagged: bool) -> None:
        super().__init__("QRC", window_length=window)
        self.reservoir = reservoir
        self.weights = weights
        self.correlators = correlators
        self.trace = [train_mse]
        self.epochs_trained = 1
        self.flags = ["qrc_singular_readout"] if flagged else []

    def predict_next(self, window) -> float:
        feats = qrc_features(self.reservoir, window, self.correlators)
        return float(feats[0] @ self.weights)


def fit_qrc_windows(x, y, hp: dict, seed: int) -> QrcModel:
    reservoir = build_reservoir(hp["n"], hp["qubits"], hp["depth"], seed)
    features = qrc_features(reservoir, x, hp["correlators"])
    weights, flagged = qrc_fit_readout(features, y, hp["ridge"])
    train_mse = float(mse(y, features @ weights))
    return QrcModel(reservoir, weights, hp["correlators"], hp["n"], train_mse, flagged)
