"""Eight forecaster families behind one fit/predict interface."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..pipeline import windowize
from .base import (
    CLAMP_RANGE,
    DEFAULT_GRIDS,
    DIVERGENCE_LIMIT,
    FAMILIES,
    HP_SCHEMAS,
    ModelSpec,
    TrainedModel,
    clamp_prediction,
    derive_seed,
    validate_hyperparameters,
)
from .baselines import (
    ArimaModel,
    LastValueModel,
    arima_fit,
    arima_predict,
    fit_arima,
    fit_last_value,
    last_value_predict,
)
from .lstm import LstmCellParams, LstmModel, LstmRegressor, lstm_cell_step
from .qdbm import QdbmModel, QdbmWeights, qdbm_forward, qdbm_qubo, qdbm_update
from .qlstm import QlstmCell, QlstmModel, QlstmNetwork, qlstm_build_vqc, qlstm_cell_step
from .qnn import CircuitRegressor, QnnModel, qnn_build_circuit, qnn_ising_build_circuit
from .qrc import QrcModel, build_reservoir, qrc_features, qrc_fit_readout
from .training import Adam, EarlyStopPolicy, fit_mse

__all__ = [
    "Adam",
    "ArimaModel",
    "CLAMP_RANGE",
    "CircuitRegressor",
    "DEFAULT_GRIDS",
    "DIVERGENCE_LIMIT",
    "EarlyStopPolicy",
    "FAMILIES",
    "HP_SCHEMAS",
    "LastValueModel",
    "LstmCellParams",
    "LstmModel",
    "LstmRegressor",
    "ModelSpec",
    "QdbmModel",
    "QdbmWeights",
    "QlstmCell",
    "QlstmModel",
    "QlstmNetwork",
    "QnnModel",
    "QrcModel",
    "TrainedModel",
    "arima_fit",
    "arima_predict",
    "build_reservoir",
    "clamp_prediction",
    "derive_seed",
    "fit_mse",
    "fit_model",
    "last_value_predict",
    "lstm_cell_step",
    "qdbm_forward",
    "qdbm_qubo",
    "qdbm_update",
    "qlstm_build_vqc",
    "qlstm_cell_step",
    "qnn_build_circuit",
    "qnn_ising_build_circuit",
    "qrc_features",
    "qrc_fit_readout",
    "train_supervised",
    "validate_hyperparameters",
    "windowed_fitters",
]


def train_supervised(family: str, x, y, hp: dict, seed: int,
                     early_stop: EarlyStopPolicy | None = None) -> TrainedModel:
    """Gradient-train one of the window-supervised families on (x, y) pairs."""
    from .lstm import fit_lstm_windows
    from .qlstm import fit_qlstm_windows
    from .qnn import fit_qnn_windows

    hp = validate_hyperparameters(family, hp)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != hp["n"]:
        raise ConfigurationError(f"windows must have shape (batch, {hp['n']})")
    if family == "LSTM":
        return fit_lstm_windows(x, y, hp, seed, early_stop)
    if family == "QNN":
        return fit_qnn_windows(x, y, hp, seed, ising=False, policy=early_stop)
    if family == "QNN_ISING":
        return fit_qnn_windows(x, y, hp, seed, ising=True, policy=early_stop)
    if family == "QLSTM":
        return fit_qlstm_windows(x, y, hp, seed, early_stop)
    raise ConfigurationError(f"{family} is not trained by the supervised loop")


def windowed_fitters(family: str):
    return family in ("LSTM", "QNN", "QNN_ISING", "QLSTM", "QDBM", "QRC")


def fit_model(spec: ModelSpec, train_values) -> TrainedModel:
    """Fit any family on a training segment of the (normalized) series."""
    from .qdbm import fit_qdbm_windows
    from .qrc import fit_qrc_windows

    train_values = np.asarray(train_values, dtype=np.float64)
    hp = spec.hyperparameters
    if spec.family == "LAST_VALUE":
        return fit_last_value(hp, spec.seed, train_values)
    if spec.family == "ARIMA":
        return fit_arima(hp, spec.seed, train_values)
    x, y = windowize(train_values, hp["n"])
    if spec.family == "QRC":
        return fit_qrc_windows(x, y, hp, spec.seed)
    if spec.family == "QDBM":
        return fit_qdbm_windows(x, y, hp, spec.seed)
    return train_supervised(spec.family, x, y, hp, spec.seed)
