"""Classical baselines: the naive last-value rule and ARIMA.

The ARIMA fit differences the series d times, seeds AR/MA coefficients with
a Hannan-Rissanen long-AR regression and refines them by minimizing the
conditional sum of squares with Adam.  Pure AR models (q = 0) are linear in
the coefficients, so they are solved directly by least squares.  Automatic
order selection scans p, q in 0..3 and d in 0..2 and keeps the order with
the smallest AIC = m*ln(RSS/m) + 2(p+q+1) on the differenced series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..errors import DataError, UsageError
from .base import TrainedModel

AUTO_P_RANGE = range(0, 4)
AUTO_D_RANGE = range(0, 3)
AUTO_Q_RANGE = range(0, 4)
_CSS_ITERATIONS = 400
_CSS_LR = 0.02
_CSS_GRAD_TOL = 1e-6


def last_value_predict(window) -> float:
    """The current value is the forecast for the next step."""
    window = np.asarray(window, dtype=np.float64)
    if window.size == 0:
        raise UsageError("last_value_predict needs a non-empty window")
    return float(window[-1])


class LastValueModel(TrainedModel):
    def __init__(self) -> None:
        super().__init__("LAST_VALUE", window_length=1)

    def predict_next(self, window) -> float:
        return last_value_predict(window)


def fit_last_value(hp: dict, seed: int, train_values) -> LastValueModel:
    return LastValueModel()


# ---------------------------------------------------------------------------
# ARIMA


@dataclass
class ArimaCoefficients:
    order: tuple[int, int, int]
    const: float
    ar: np.ndarray
    ma: np.ndarray
    resid_tail: np.ndarray
    rss: float
    aic: float
    converged: bool


def _difference(values: np.ndarray, d: int) -> np.ndarray:
    for _ in range(d):
        values = np.diff(values)
    return values


def _css_residuals(w: np.ndarray, const: float, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    """Residuals e_t for t >= p under zero initial conditions.

    e_t + sum_j theta_j e_{t-j} = w_t - c - sum_i phi_i w_{t-i}, so the
    residual recursion is an IIR filter with denominator [1, theta].
    """
    p, q = len(ar), len(ma)
    m = len(w)
    rhs = w[p:] - const
    for i in range(1, p + 1):
        rhs = rhs - ar[i - 1] * w[p - i : m - i]
    if q == 0:
        return rhs
    return lfilter([1.0], np.concatenate(([1.0], ma)), rhs)


def _css_rss_and_grad(w, const, ar, ma, fit_const):
    p, q = len(ar), len(ma)
    m = len(w)
    e = _css_residuals(w, const, ar, ma)
    rss = float(e @ e)
    denom = np.concatenate(([1.0], ma))
    grads = []
    if fit_const:
        d_const = lfilter([1.0], denom, -np.ones(len(e)))
        grads.append(2.0 * float(e @ d_const))
    for i in range(1, p + 1):
        d_ar = lfilter([1.0], denom, -w[p - i : m - i])
        grads.append(2.0 * float(e @ d_ar))
    for j in range(1, q + 1):
        shifted = np.concatenate((np.zeros(j), e[:-j])) if j < len(e) else np.zeros(len(e))
        d_ma = lfilter([1.0], denom, -shifted)
        grads.append(2.0 * float(e @ d_ma))
    return rss, e, np.asarray(grads)


def _hannan_rissanen_init(w: np.ndarray, p: int, q: int, fit_const: bool):
    """Long-AR residual proxy, then one OLS pass over AR lags and lagged residuals."""
    m = len(w)
    long_lag = min(20, max(p + q, int(np.ceil(np.sqrt(m) / 2)), 4))
    cols = [np.ones(m - long_lag)] + [w[long_lag - i : m - i] for i in range(1, long_lag + 1)]
    design = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(design, w[long_lag:], rcond=None)
    resid = np.zeros(m)
    resid[long_lag:] = w[long_lag:] - design @ beta

    t0 = long_lag + q
    cols = []
    if fit_const:
        cols.append(np.ones(m - t0))
    cols += [w[t0 - i : m - i] for i in range(1, p + 1)]
    cols += [resid[t0 - j : m - j] for j in range(1, q + 1)]
    target = w[t0:]
    design = np.column_stack(cols) if cols else np.zeros((m - t0, 0))
    if design.shape[1] == 0:
        return 0.0, np.zeros(0), np.zeros(0)
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    k = 0
    const = 0.0
    if fit_const:
        const = float(beta[0])
        k = 1
    ar = np.asarray(beta[k : k + p], dtype=np.float64)
    ma = np.asarray(beta[k + p : k + p + q], dtype=np.float64)
    return const, ar, ma


def _fit_order(train: np.ndarray, order: tuple[int, int, int]) -> ArimaCoefficients:
    p, d, q = order
    if len(train) <= p + d + q + 10:
        raise DataError(
            f"series of length {len(train)} is too short for ARIMA order {order}"
        )
    w = _difference(train, d)
    m = len(w)
    fit_const = d == 0

    if q == 0:
        # pure AR: conditional least squares is exact
        cols = []
        if fit_const:
            cols.append(np.ones(m - p))
        cols += [w[p - i : m - i] for i in range(1, p + 1)]
        if cols:
            design = np.column_stack(cols)
            beta, *_ = np.linalg.lstsq(design, w[p:], rcond=None)
        else:
            beta = np.zeros(0)
        k = 0
        const = 0.0
        if fit_const and len(beta):
            const = float(beta[0])
            k = 1
        ar = np.asarray(beta[k : k + p], dtype=np.float64)
        ma = np.zeros(0)
        converged = True
    else:
        const, ar, ma = _hannan_rissanen_init(w, p, q, fit_const)
        theta = np.concatenate(([const] if fit_const else [], ar, ma))
        from .training import Adam  # local import: avoid a module cycle at import time

        adam = Adam(len(theta), _CSS_LR)
        best_theta = theta.copy()
        best_rss = np.inf
        converged = False
        for _ in range(_CSS_ITERATIONS):
            k = 1 if fit_const else 0
            rss, _, grad = _css_rss_and_grad(
                w, theta[0] if fit_const else 0.0, theta[k : k + p], theta[k + p :], fit_const
            )
            if not np.isfinite(rss) or not np.all(np.isfinite(grad)):
                break
            if rss < best_rss:
                best_rss = rss
                best_theta = theta.copy()
            if np.max(np.abs(grad)) < _CSS_GRAD_TOL:
                converged = True
                break
            theta = adam.step(theta, grad)
            # keep the MA polynomial away from the non-invertible region
            theta[k + p :] = np.clip(theta[k + p :], -0.99, 0.99)
        theta = best_theta
        k = 1 if fit_const else 0
        const = float(theta[0]) if fit_const else 0.0
        ar = theta[k : k + p]
        ma = theta[k + p :]

    e = _css_residuals(w, const, ar, ma)
    rss = float(e @ e)
    aic = m * np.log(max(rss, 1e-300) / m) + 2 * (p + q + 1)
    resid_tail = e[-q:] if q else np.zeros(0)
    return ArimaCoefficients(order, const, ar, ma, resid_tail, rss, aic, converged)


class ArimaModel(TrainedModel):
    """Fitted ARIMA; the prediction window spans the whole training segment
    so the residual recursion effectively replays the in-sample residuals."""

    def __init__(self, coefficients: ArimaCoefficients, window_length: int) -> None:
        super().__init__("ARIMA", window_length=window_length)
        self.coefficients = coefficients
        self.flags: list[str] = [] if coefficients.converged else ["arima_not_converged"]

    @property
    def order(self) -> tuple[int, int, int]:
        return self.coefficients.order

    def predict_next(self, window) -> float:
        return arima_predict(self, window)


def arima_fit(train, order="auto") -> ArimaModel:
    """Fit one order, or scan the auto grid and keep the lowest-AIC order."""
    train = np.asarray(train, dtype=np.float64)
    if not np.all(np.isfinite(train)):
        raise DataError("ARIMA input contains non-finite values")
    if order == "auto":
        best = None
        for d in AUTO_D_RANGE:
            for p in AUTO_P_RANGE:
                for q in AUTO_Q_RANGE:
                    if len(train) <= p + d + q + 10:
                        continue
                    candidate = _fit_order(train, (p, d, q))
                    if best is None or candidate.aic < best.aic:
                        best = candidate
        if best is None:
            raise DataError(f"series of length {len(train)} is too short for auto ARIMA")
        coeffs = best
    else:
        coeffs = _fit_order(train, tuple(order))
    return ArimaModel(coeffs, window_length=len(train))


def arima_predict(model: ArimaModel, history) -> float:
    """One-step forecast: AR+MA on the d-times differenced history, then
    re-integrate with the last value of each difference level."""
    history = np.asarray(history, dtype=np.float64)
    p, d, q = model.order
    if len(history) < max(p + d + q, d + 1, 1):
        raise UsageError(
            f"ARIMA({p},{d},{q}) needs at least {max(p + d + q, d + 1, 1)} history points"
        )
    c = model.coefficients
    tails = []
    w = history
    for _ in range(d):
        tails.append(w[-1])
        w = np.diff(w)
    forecast = c.const
    for i in range(1, p + 1):
        forecast += c.ar[i - 1] * w[-i]
    if q:
        e = _css_residuals(w, c.const, c.ar, c.ma)
        for j in range(1, q + 1):
            forecast += c.ma[j - 1] * (e[-j] if j <= len(e) else 0.0)
    return float(forecast + sum(tails))


def fit_arima(hp: dict, seed: int, train_values) -> ArimaModel:
    return arima_fit(train_values, hp.get("order", "auto"))
