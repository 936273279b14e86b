"""Shared model interface: specs, hyperparameter schemas, default grids.

Every forecaster is built from a (family, hyperparameters, seed) triple and,
once fitted, exposes ``predict_next`` over a window of the model's own
``window_length``.  Hyperparameters are validated against the family schema
before anything runs, so a bad grid fails fast instead of mid-experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError

FAMILIES = (
    "LAST_VALUE",
    "ARIMA",
    "LSTM",
    "QNN",
    "QNN_ISING",
    "QDBM",
    "QRC",
    "QLSTM",
)

# families whose fit runs an epoch loop with a validation trace
TRAINED_FAMILIES = ("LSTM", "QNN", "QNN_ISING", "QDBM", "QLSTM")

# predictions on normalized data are clamped to this range before
# denormalization; raw values beyond DIVERGENCE_LIMIT flag the run
CLAMP_RANGE = (-0.5, 1.5)
DIVERGENCE_LIMIT = 10.0


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown model family {self.family!r}; expected one of {FAMILIES}"
            )
        object.__setattr__(
            self, "hyperparameters", validate_hyperparameters(self.family, self.hyperparameters)
        )


class TrainedModel:
    """Fit result: immutable parameters plus a pure one-step predictor."""

    family: str
    window_length: int

    def __init__(self, family: str, window_length: int) -> None:
        self.family = family
        self.window_length = window_length
        self.trace: list[float] = []
        self.epochs_trained: int = 0
        self.diverged: bool = False

    def predict_next(self, window: np.ndarray) -> float:
        raise NotImplementedError


def _positive(name):
    return lambda v: (isinstance(v, (int, float)) and v > 0, f"{name} must be positive")


def _int_at_least(name, low, high=None):
    def check(v):
        ok = isinstance(v, int) and not isinstance(v, bool) and v >= low
        if high is not None:
            ok = ok and v <= high
        bound = f"in {low}..{high}" if high is not None else f">= {low}"
        return ok, f"{name} must be an integer {bound}"

    return check


def _non_negative(name):
    return lambda v: (isinstance(v, (int, float)) and v >= 0, f"{name} must be non-negative")


def _bool(name):
    return lambda v: (isinstance(v, bool), f"{name} must be a boolean")


def _arima_order(v):
    if v == "auto":
        return True, ""
    ok = (
        isinstance(v, (list, tuple))
        and len(v) == 3
        and all(isinstance(k, int) and not isinstance(k, bool) for k in v)
        and 0 <= v[0] <= 5
        and 0 <= v[1] <= 2
        and 0 <= v[2] <= 5
    )
    return ok, "order must be 'auto' or (p, d, q) with p,q in 0..5 and d in 0..2"


_EPOCH_KNOBS = {
    "max_epochs": (200, _int_at_least("max_epochs", 0)),
    "patience": (10, _int_at_least("patience", 1)),
    "min_delta": (1e-4, _non_negative("min_delta")),
}

# name -> (default, validator); None default means required
HP_SCHEMAS: dict[str, dict] = {
    "LAST_VALUE": {},
    "ARIMA": {"order": ("auto", _arima_order)},
    "LSTM": {
        "n": (4, _int_at_least("n", 1)),
        "hidden": (8, _int_at_least("hidden", 1)),
        "lr": (1e-2, _positive("lr")),
        **_EPOCH_KNOBS,
    },
    "QNN": {
        "n": (4, _int_at_least("n", 1, 12)),
        "layers": (2, _int_at_least("layers", 1)),
        "lr": (1e-2, _positive("lr")),
        **_EPOCH_KNOBS,
    },
    "QNN_ISING": {
        "n": (4, _int_at_least("n", 2, 12)),
        "layers": (1, _int_at_least("layers", 1)),
        "lr": (1e-2, _positive("lr")),
        **_EPOCH_KNOBS,
    },
    "QDBM": {
        "n": (4, _int_at_least("n", 1)),
        "hidden": (4, _int_at_least("hidden", 1, 12)),
        "lr": (1e-2, _positive("lr")),
        "reads": (25, _int_at_least("reads", 1)),
        "sweeps": (200, _int_at_least("sweeps", 1)),
        **_EPOCH_KNOBS,
    },
    "QRC": {
        "n": (4, _int_at_least("n", 1)),
        "qubits": (4, _int_at_least("qubits", 1, 12)),
        "depth": (2, _int_at_least("depth", 0)),
        "ridge": (1e-3, _non_negative("ridge")),
        "correlators": (True, _bool("correlators")),
    },
    "QLSTM": {
        "n": (4, _int_at_least("n", 1)),
        "hidden": (2, _int_at_least("hidden", 1, 12)),
        "qubits": (None, _int_at_least("qubits", 1, 12)),
        "layers": (1, _int_at_least("layers", 1)),
        "lr": (5e-2, _positive("lr")),
        **_EPOCH_KNOBS,
    },
}

# search spaces for grid-search HPO; Cartesian products stay under the cap
DEFAULT_GRIDS: dict[str, dict] = {
    "LAST_VALUE": {},
    "ARIMA": {"order": ["auto"]},
    "LSTM": {"n": [2, 4, 8], "hidden": [4, 8, 16], "lr": [1e-3, 1e-2]},
    "QNN": {"n": [2, 4, 8], "layers": [1, 2, 4], "lr": [1e-3, 1e-2]},
    "QNN_ISING": {"n": [2, 4, 8], "layers": [1, 2, 4], "lr": [1e-3, 1e-2]},
    "QDBM": {
        "n": [2, 4, 8],
        "hidden": [4, 8],
        "lr": [1e-3, 1e-2, 1e-1],
        "reads": [10, 25, 50],
    },
    "QRC": {"n": [2, 4, 8], "qubits": [4, 6], "depth": [2, 4], "ridge": [0.0, 1e-3, 1e-1]},
    "QLSTM": {"n": [2, 4, 8], "hidden": [2, 4, 6], "lr": [1e-2, 5e-2]},
}


def validate_hyperparameters(family: str, hp: dict | None) -> dict:
    """Fill defaults and type-check against the family schema."""
    if family not in HP_SCHEMAS:
        raise ConfigurationError(f"unknown model family {family!r}")
    schema = HP_SCHEMAS[family]
    hp = dict(hp or {})
    unknown = set(hp) - set(schema)
    if unknown:
        raise ConfigurationError(
            f"unknown hyperparameter(s) {sorted(unknown)} for family {family}"
        )
    resolved = {}
    for name, (default, check) in schema.items():
        if name in hp:
            value = hp[name]
            if isinstance(value, list):
                value = tuple(value)
            ok, message = check(value)
            if not ok:
                raise ConfigurationError(f"{family}: {message} (got {value!r})")
            resolved[name] = value
        elif default is not None:
            resolved[name] = default
    if family == "QLSTM":
        qubits = resolved.get("qubits", resolved["hidden"] + 1)
        if qubits < resolved["hidden"]:
            raise ConfigurationError(
                f"QLSTM hidden size {resolved['hidden']} exceeds qubit count {qubits}"
            )
        resolved["qubits"] = qubits
    return resolved


def clamp_prediction(raw: float) -> float:
    lo, hi = CLAMP_RANGE
    return float(min(max(raw, lo), hi))


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts (order-sensitive)."""
    return int(np.random.SeedSequence([int(p) & 0x7FFFFFFF for p in parts]).generate_state(1, np.uint64)[0])
