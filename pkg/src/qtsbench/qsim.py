"""Dense statevector simulation of small parameterized circuits.

Qubit 0 is the most significant bit of the basis index, so the basis state
|q0 q1 ... q_{n-1}> lives at index sum_i q_i * 2^(n-1-i).  Rotations follow
the convention RP(theta) = exp(-i*theta*P/2) and the two-qubit Ising gates
exp(-i*theta*(P(x)P)/2); every parameterized generator therefore has
eigenvalues +-1/2 and the two-term parameter-shift rule is exact.

All operations are pure functions of their inputs.  The batched entry points
(`run_circuit_states`, `circuit_jacobians`) evaluate one circuit on many
input rows at once and are what the trainable models call in their inner
loops; the single-sample operations are thin wrappers around the same
kernel.  `circuit_unitary` composes dense gate matrices through an entirely
separate code path and exists as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, UsageError

MAX_QUBITS = 12
ORACLE_MAX_QUBITS = 4


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    ISING_XX = "ISING_XX"
    ISING_YY = "ISING_YY"
    ISING_ZZ = "ISING_ZZ"


ROTATION_GATES = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
ISING_GATES = frozenset({GateKind.ISING_XX, GateKind.ISING_YY, GateKind.ISING_ZZ})
PARAMETRIC_GATES = ROTATION_GATES | ISING_GATES


@dataclass(frozen=True)
class Gate:
    """One gate application; ``angle`` stays None when a slot binds it later."""

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if self.kind == GateKind.CNOT:
            if len(targets) != 2 or targets[0] == targets[1]:
                raise UsageError("CNOT requires two distinct target qubits")
            if self.angle is not None:
                raise UsageError("CNOT takes no angle")
        elif self.kind in ROTATION_GATES:
            if len(targets) != 1:
                raise UsageError(f"{self.kind.value} acts on exactly one qubit")
        elif self.kind in ISING_GATES:
            if len(targets) != 2 or targets[0] == targets[1]:
                raise UsageError(f"{self.kind.value} requires two distinct target qubits")
        else:  # pragma: no cover - enum is closed
            raise UsageError(f"unknown gate kind {self.kind!r}")


class Role(str, Enum):
    FIXED = "FIXED"
    DATA = "DATA"
    PARAM = "PARAM"


@dataclass(frozen=True)
class Slot:
    """A gate plus the rule that resolves its angle at bind time."""

    gate: Gate
    role: Role
    input_index: int | None = None
    scale: float | None = None
    param_index: int | None = None


@dataclass
class Circuit:
    """Ordered gate slots over a fixed qubit register.

    FIXED slots carry their angle on the gate itself, DATA slots read
    ``scale * data[input_index]`` and PARAM slots read ``params[param_index]``.
    """

    num_qubits: int
    slots: list[Slot] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ConfigurationError(
                f"num_qubits must be in 1..{MAX_QUBITS}, got {self.num_qubits}"
            )

    def _check_gate(self, gate: Gate) -> None:
        for t in gate.targets:
            if not 0 <= t < self.num_qubits:
                raise UsageError(
                    f"gate target {t} out of range for {self.num_qubits} qubits"
                )

    def add_fixed(self, gate: Gate) -> "Circuit":
        self._check_gate(gate)
        if gate.kind in PARAMETRIC_GATES and gate.angle is None:
            raise UsageError("fixed slot for a parametric gate needs an angle")
        self.slots.append(Slot(gate, Role.FIXED))
        return self

    def add_data(self, gate: Gate, input_index: int, scale: float = 1.0) -> "Circuit":
        self._check_gate(gate)
        if gate.kind not in PARAMETRIC_GATES:
            raise UsageError("only parametric gates can take a DATA role")
        if input_index < 0:
            raise UsageError("input_index must be non-negative")
        self.slots.append(Slot(gate, Role.DATA, input_index=input_index, scale=float(scale)))
        return self

    def add_param(self, gate: Gate, param_index: int) -> "Circuit":
        self._check_gate(gate)
        if gate.kind not in PARAMETRIC_GATES:
            raise UsageError("only parametric gates can take a PARAM role")
        if param_index < 0:
            raise UsageError("param_index must be non-negative")
        self.slots.append(Slot(gate, Role.PARAM, param_index=param_index))
        return self

    @property
    def num_params(self) -> int:
        indices = [s.param_index for s in self.slots if s.role == Role.PARAM]
        if not indices:
            return 0
        n = max(indices) + 1
        missing = set(range(n)) - set(indices)
        if missing:
            raise UsageError(f"parameter indices {sorted(missing)} never appear in the circuit")
        return n

    @property
    def num_inputs(self) -> int:
        indices = [s.input_index for s in self.slots if s.role == Role.DATA]
        return 0 if not indices else max(indices) + 1

    def param_slot_count(self) -> int:
        return sum(1 for s in self.slots if s.role == Role.PARAM)

    def data_slot_count(self) -> int:
        return sum(1 for s in self.slots if s.role == Role.DATA)


@dataclass(frozen=True)
class Observable:
    """Weighted sum of Pauli-Z products; terms are (coefficient, qubit subset)."""

    terms: tuple[tuple[float, tuple[int, ...]], ...]

    @classmethod
    def z(cls, qubit: int, coeff: float = 1.0) -> "Observable":
        return cls(((float(coeff), (int(qubit),)),))

    @classmethod
    def zz(cls, q1: int, q2: int, coeff: float = 1.0) -> "Observable":
        if q1 == q2:
            raise UsageError("ZZ term needs two distinct qubits")
        return cls(((float(coeff), (int(q1), int(q2))),))

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(self.terms + other.terms)


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state as 2^n complex amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def norm_error(self) -> float:
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)


def init_state(num_qubits: int) -> StateVector:
    """All-zeros computational basis state |0...0>."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"num_qubits must be in 1..{MAX_QUBITS}, got {num_qubits}"
        )
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


# ---------------------------------------------------------------------------
# batched kernel


def _apply_kernel(
    states: np.ndarray,
    kind: GateKind,
    targets: tuple[int, ...],
    angle,
    num_qubits: int,
) -> np.ndarray:
    """Apply one gate to a (B, 2^n) block; ``angle`` is scalar or (B,)."""
    b = states.shape[0]
    t = states.reshape((b,) + (2,) * num_qubits)

    if kind in ROTATION_GATES:
        q = targets[0]
        t = np.moveaxis(t, 1 + q, -1).reshape(b, -1, 2)
        half = np.asarray(angle, dtype=np.float64) / 2.0
        if half.ndim:
            half = half[:, None]
        a0, a1 = t[..., 0], t[..., 1]
        out = np.empty_like(t)
        if kind == GateKind.RX:
            c, s = np.cos(half), np.sin(half)
            out[..., 0] = c * a0 - 1j * s * a1
            out[..., 1] = -1j * s * a0 + c * a1
        elif kind == GateKind.RY:
            c, s = np.cos(half), np.sin(half)
            out[..., 0] = c * a0 - s * a1
            out[..., 1] = s * a0 + c * a1
        else:  # RZ
            ph = np.exp(-1j * half)
            out[..., 0] = ph * a0
            out[..., 1] = np.conj(ph) * a1
        nd = out.reshape((b,) + (2,) * num_qubits)
        return np.moveaxis(nd, -1, 1 + q).reshape(b, -1)

    qa, qb = targets
    t = np.moveaxis(t, (1 + qa, 1 + qb), (-2, -1)).reshape(b, -1, 4)
    out = np.empty_like(t)
    x0, x1, x2, x3 = t[..., 0], t[..., 1], t[..., 2], t[..., 3]
    if kind == GateKind.CNOT:
        out[..., 0] = x0
        out[..., 1] = x1
        out[..., 2] = x3
        out[..., 3] = x2
    else:
        half = np.asarray(angle, dtype=np.float64) / 2.0
        if half.ndim:
            half = half[:, None]
        if kind == GateKind.ISING_ZZ:
            ph = np.exp(-1j * half)
            out[..., 0] = ph * x0
            out[..., 1] = np.conj(ph) * x1
            out[..., 2] = np.conj(ph) * x2
            out[..., 3] = ph * x3
        else:
            c, s = np.cos(half), np.sin(half)
            if kind == GateKind.ISING_XX:
                out[..., 0] = c * x0 - 1j * s * x3
                out[..., 1] = c * x1 - 1j * s * x2
                out[..., 2] = c * x2 - 1j * s * x1
                out[..., 3] = c * x3 - 1j * s * x0
            else:  # ISING_YY
                out[..., 0] = c * x0 + 1j * s * x3
                out[..., 1] = c * x1 - 1j * s * x2
                out[..., 2] = c * x2 - 1j * s * x1
                out[..., 3] = c * x3 + 1j * s * x0
    nd = out.reshape((b,) + (2,) * (num_qubits - 2) + (2, 2))
    return np.moveaxis(nd, (-2, -1), (1 + qa, 1 + qb)).reshape(b, -1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """U * state for one gate; a FIXED angle is required for parametric kinds."""
    for t in gate.targets:
        if not 0 <= t < state.num_qubits:
            raise UsageError(f"gate target {t} out of range for {state.num_qubits} qubits")
    if gate.kind in PARAMETRIC_GATES and gate.angle is None:
        raise UsageError("parametric gate applied without an angle")
    block = state.amplitudes[np.newaxis, :].astype(np.complex128, copy=True)
    block = _apply_kernel(block, gate.kind, gate.targets, gate.angle, state.num_qubits)
    return StateVector(state.num_qubits, block[0])


def z_sign_vector(num_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    """(-1)^(parity of the selected bits) for every basis index."""
    idx = np.arange(2**num_qubits)
    parity = np.zeros_like(idx)
    for q in qubits:
        if not 0 <= q < num_qubits:
            raise UsageError(f"observable qubit {q} out of range")
        parity ^= (idx >> (num_qubits - 1 - q)) & 1
    return 1.0 - 2.0 * parity


def expectation(state: StateVector, obs: Observable) -> float:
    """Sum of coeff * <state| Z-term |state> over the observable's terms."""
    probs = np.abs(state.amplitudes) ** 2
    total = 0.0
    for coeff, qubits in obs.terms:
        total += coeff * float(probs @ z_sign_vector(state.num_qubits, qubits))
    return total


def expectations_batch(states: np.ndarray, num_qubits: int, term_qubits) -> np.ndarray:
    """(B, K) matrix of <Z-subset> values, one column per term in ``term_qubits``."""
    probs = np.abs(states) ** 2
    signs = np.stack([z_sign_vector(num_qubits, tuple(q)) for q in term_qubits])
    return probs @ signs.T


# ---------------------------------------------------------------------------
# circuit execution


def _bind_slot_angles(circuit: Circuit, params, data) -> list:
    """Resolve each slot's angle; entries are None (CNOT), scalar, or (B,)."""
    params = np.asarray(params, dtype=np.float64)
    n_params = circuit.num_params
    if params.shape != (n_params,):
        raise UsageError(f"expected {n_params} parameters, got shape {params.shape}")
    data = np.asarray(data, dtype=np.float64)
    single = data.ndim == 1
    if single:
        data = data[np.newaxis, :]
    if data.ndim != 2:
        raise UsageError("data must be a vector or a (batch, inputs) matrix")
    if circuit.num_inputs > data.shape[1]:
        raise UsageError(
            f"circuit reads input index {circuit.num_inputs - 1} "
            f"but data has {data.shape[1]} columns"
        )
    angles = []
    for slot in circuit.slots:
        if slot.gate.kind == GateKind.CNOT:
            angles.append(None)
        elif slot.role == Role.FIXED:
            angles.append(float(slot.gate.angle))
        elif slot.role == Role.PARAM:
            angles.append(float(params[slot.param_index]))
        else:
            col = slot.scale * data[:, slot.input_index]
            angles.append(float(col[0]) if single else col)
    return angles


def _simulate_slots(circuit: Circuit, slot_angles: list, batch: int) -> np.ndarray:
    states = np.zeros((batch, 2**circuit.num_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    for slot, angle in zip(circuit.slots, slot_angles):
        states = _apply_kernel(states, slot.gate.kind, slot.gate.targets, angle, circuit.num_qubits)
    return states


def run_circuit_states(circuit: Circuit, params, data) -> np.ndarray:
    """Final statevectors (B, 2^n) for a batch of input rows."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[np.newaxis, :]
    angles = _bind_slot_angles(circuit, params, data)
    return _simulate_slots(circuit, angles, data.shape[0])


def run_circuit(circuit: Circuit, params, data, obs: Observable) -> float:
    """Bind angles, run on |0...0>, return the observable expectation."""
    angles = _bind_slot_angles(circuit, params, np.asarray(data, dtype=np.float64))
    states = _simulate_slots(circuit, angles, 1)
    return expectation(StateVector(circuit.num_qubits, states[0]), obs)


def parameter_shift_gradient(circuit: Circuit, params, data, obs: Observable) -> np.ndarray:
    """Exact gradient d<obs>/d(params) via per-slot +-pi/2 shifts.

    A parameter appearing in several slots accumulates one shift pair per
    slot (product rule over gate instances).
    """
    base = _bind_slot_angles(circuit, params, np.asarray(data, dtype=np.float64))
    grad = np.zeros(circuit.num_params)
    for s, slot in enumerate(circuit.slots):
        if slot.role != Role.PARAM:
            continue
        shifted = list(base)
        shifted[s] = base[s] + np.pi / 2
        f_plus = expectation(
            StateVector(circuit.num_qubits, _simulate_slots(circuit, shifted, 1)[0]), obs
        )
        shifted[s] = base[s] - np.pi / 2
        f_minus = expectation(
            StateVector(circuit.num_qubits, _simulate_slots(circuit, shifted, 1)[0]), obs
        )
        grad[slot.param_index] += (f_plus - f_minus) / 2.0
    return grad


def circuit_jacobians(
    circuit: Circuit,
    params,
    data,
    term_qubits,
    wrt_params: bool = True,
    wrt_data: bool = False,
):
    """Batched values and parameter-shift Jacobians for Z-subset readouts.

    Returns (values (B, K), d_params (B, K, P) or None, d_data (B, K, D) or
    None).  The data Jacobian folds in each DATA slot's scale factor, so it
    differentiates with respect to the raw input columns.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data[np.newaxis, :]
    batch = data.shape[0]
    base = _bind_slot_angles(circuit, params, data)
    values = expectations_batch(
        _simulate_slots(circuit, base, batch), circuit.num_qubits, term_qubits
    )
    k = values.shape[1]
    d_params = np.zeros((batch, k, circuit.num_params)) if wrt_params else None
    d_data = np.zeros((batch, k, circuit.num_inputs)) if wrt_data else None
    for s, slot in enumerate(circuit.slots):
        if slot.role == Role.PARAM and wrt_params:
            target, weight = d_params, 1.0
            index = slot.param_index
        elif slot.role == Role.DATA and wrt_data:
            target, weight = d_data, slot.scale
            index = slot.input_index
        else:
            continue
        shifted = list(base)
        shifted[s] = base[s] + np.pi / 2
        f_plus = expectations_batch(
            _simulate_slots(circuit, shifted, batch), circuit.num_qubits, term_qubits
        )
        shifted[s] = base[s] - np.pi / 2
        f_minus = expectations_batch(
            _simulate_slots(circuit, shifted, batch), circuit.num_qubits, term_qubits
        )
        target[:, :, index] += weight * (f_plus - f_minus) / 2.0
    return values, d_params, d_data


# ---------------------------------------------------------------------------
# dense-matrix oracle


def gate_matrix(kind: GateKind, angle: float | None = None) -> np.ndarray:
    """Dense 2x2 / 4x4 unitary for one gate (oracle building block)."""
    if kind == GateKind.CNOT:
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
        )
    if angle is None:
        raise UsageError(f"{kind.value} needs an angle")
    half = angle / 2.0
    c, s = np.cos(half), np.sin(half)
    if kind == GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == GateKind.RZ:
        return np.diag([np.exp(-1j * half), np.exp(1j * half)]).astype(np.complex128)
    eye = np.eye(4, dtype=np.complex128)
    if kind == GateKind.ISING_XX:
        pp = np.fliplr(np.eye(4)).astype(np.complex128)
    elif kind == GateKind.ISING_YY:
        pp = np.array(
            [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=np.complex128
        )
    else:  # ISING_ZZ
        pp = np.diag([1, -1, -1, 1]).astype(np.complex128)
    return c * eye - 1j * s * pp


def _embed(kind: GateKind, targets: tuple[int, ...], angle, num_qubits: int) -> np.ndarray:
    dim = 2**num_qubits
    small = gate_matrix(kind, angle)
    if len(targets) == 1:
        q = targets[0]
        left = np.eye(2**q, dtype=np.complex128)
        right = np.eye(2 ** (num_qubits - 1 - q), dtype=np.complex128)
        return np.kron(np.kron(left, small), right)
    qa, qb = targets
    other_mask = (dim - 1) ^ (1 << (num_qubits - 1 - qa)) ^ (1 << (num_qubits - 1 - qb))

    def sub(i: int) -> int:
        return 2 * ((i >> (num_qubits - 1 - qa)) & 1) + ((i >> (num_qubits - 1 - qb)) & 1)

    full = np.zeros((dim, dim), dtype=np.complex128)
    for r in range(dim):
        for c_ in range(dim):
            if (r & other_mask) == (c_ & other_mask):
                full[r, c_] = small[sub(r), sub(c_)]
    return full


def circuit_unitary(circuit: Circuit, params, data) -> np.ndarray:
    """Full 2^n x 2^n unitary by composing dense gate matrices (test oracle)."""
    if circuit.num_qubits > ORACLE_MAX_QUBITS:
        raise UsageError(
            f"circuit_unitary is an oracle limited to {ORACLE_MAX_QUBITS} qubits"
        )
    angles = _bind_slot_angles(circuit, params, np.asarray(data, dtype=np.float64))
    u = np.eye(2**circuit.num_qubits, dtype=np.complex128)
    for slot, angle in zip(circuit.slots, angles):
        u = _embed(slot.gate.kind, slot.gate.targets, angle, circuit.num_qubits) @ u
    return u
