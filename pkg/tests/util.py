"""Shared helpers for the test suite: random circuits and finite differences."""

from __future__ import annotations

import numpy as np

from qtsbench.qsim import Circuit, Gate, GateKind, Observable, run_circuit

ALL_KINDS = list(GateKind)


def random_circuit(rng: np.random.Generator, num_qubits: int, num_slots: int,
                   with_data: bool = False, num_inputs: int = 0) -> Circuit:
    """Random circuit touching all gate kinds, with PARAM (and optional DATA) slots."""
    circuit = Circuit(num_qubits)
    param_index = 0
    for _ in range(num_slots):
        kind = ALL_KINDS[rng.integers(len(ALL_KINDS))]
        if kind == GateKind.CNOT or kind.value.startswith("ISING"):
            if num_qubits < 2:
                kind = GateKind.RX
        if kind == GateKind.CNOT:
            a, b = rng.choice(num_qubits, size=2, replace=False)
            circuit.add_fixed(Gate(kind, (int(a), int(b))))
            continue
        if kind.value.startswith("ISING"):
            a, b = rng.choice(num_qubits, size=2, replace=False)
            targets = (int(a), int(b))
        else:
            targets = (int(rng.integers(num_qubits)),)
        gate = Gate(kind, targets)
        choice = rng.random()
        if with_data and choice < 0.3:
            circuit.add_data(gate, int(rng.integers(num_inputs)), scale=float(rng.uniform(0.5, np.pi)))
        elif choice < 0.7:
            circuit.add_param(gate, param_index)
            param_index += 1
        else:
            circuit.add_fixed(Gate(kind, targets, angle=float(rng.uniform(0, 2 * np.pi))))
    # guarantee at least one trainable slot
    if param_index == 0:
        circuit.add_param(Gate(GateKind.RX, (0,)), 0)
    return circuit


def fd_gradient(circuit: Circuit, params: np.ndarray, data, obs: Observable,
                eps: float = 1e-6) -> np.ndarray:
    """Central finite difference of run_circuit with respect to params."""
    grad = np.zeros_like(params, dtype=np.float64)
    for j in range(len(params)):
        up = params.copy()
        up[j] += eps
        down = params.copy()
        down[j] -= eps
        grad[j] = (run_circuit(circuit, up, data, obs) - run_circuit(circuit, down, data, obs)) / (2 * eps)
    return grad


def numeric_gradient(fn, theta: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite difference of a scalar function of a flat vector."""
    grad = np.zeros_like(theta, dtype=np.float64)
    for j in range(len(theta)):
        up = theta.copy()
        up[j] += eps
        down = theta.copy()
        down[j] -= eps
        grad[j] = (fn(up) - fn(down)) / (2 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Max componentwise |a-b| / max(1, |a|, |b|)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom))
