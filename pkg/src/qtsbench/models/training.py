"""Adam-based MSE training loop shared by every gradient-trained forecaster.

A trainable only has to expose flat parameters and a (loss, gradient) pair;
the loop owns the validation split, the per-epoch trace, early stopping and
best-epoch parameter restoration.  Divergence (non-finite loss or gradient)
aborts the loop and is reported on the result rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..pipeline import early_stop_check, mse


@dataclass(frozen=True)
class EarlyStopPolicy:
    patience: int = 10
    min_delta: float = 1e-4
    max_epochs: int = 200

    def __post_init__(self) -> None:
        if self.patience < 1:
            raise ConfigurationError("patience must be at least 1")
        if self.min_delta < 0:
            raise ConfigurationError("min_delta must be non-negative")
        if self.max_epochs < 0:
            raise ConfigurationError("max_epochs must be non-negative")

    @classmethod
    def from_hyperparameters(cls, hp: dict) -> "EarlyStopPolicy":
        return cls(
            patience=hp.get("patience", 10),
            min_delta=hp.get("min_delta", 1e-4),
            max_epochs=hp.get("max_epochs", 200),
        )


class Adam:
    """Adam update rule with beta1=0.9, beta2=0.999, eps=1e-8."""

    def __init__(self, size: int, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class FitResult:
    params: np.ndarray
    trace: list[float] = field(default_factory=list)
    epochs_trained: int = 0
    best_epoch: int = -1
    diverged: bool = False


def validation_split(x, y):
    """Temporal split: the most recent ~10% of windows become the val slice."""
    n = len(x)
    k = max(1, n // 10) if n >= 2 else 0
    if k == 0:
        return x, y, x, y
    return x[:-k], y[:-k], x[-k:], y[-k:]


def fit_mse(trainable, x, y, lr: float, policy: EarlyStopPolicy) -> FitResult:
    """Minimize MSE with Adam until early stopping or the epoch cap.

    The trainable is left holding the parameters of the best validation
    epoch (earliest argmin), or its initial parameters when max_epochs is 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) == 0:
        raise ConfigurationError("training windows and targets must be non-empty and aligned")
    x_train, y_train, x_val, y_val = validation_split(x, y)

    params = trainable.get_params().copy()
    result = FitResult(params=params.copy())
    if policy.max_epochs == 0:
        return result

    adam = Adam(len(params), lr)
    best_loss = np.inf
    best_params = params.copy()
    best_epoch = -1

    for epoch in range(policy.max_epochs):
        loss, grad = trainable.loss_and_grad(x_train, y_train)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            result.diverged = True
            break
        params = adam.step(params, grad)
        trainable.set_params(params)
        val_loss = float(mse(y_val, trainable.predict(x_val)))
        if not np.isfinite(val_loss):
            result.diverged = True
            break
        result.trace.append(val_loss)
        result.epochs_trained = epoch + 1
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = params.copy()
            best_epoch = epoch
        stop, _ = early_stop_check(result.trace, policy.patience, policy.min_delta)
        if stop:
            break

    if best_epoch >= 0:
        trainable.set_params(best_params)
        result.params = best_params
        result.best_epoch = best_epoch
    else:
        trainable.set_params(result.params)
    return result
