"""ARIMA(p, d, q) with constant, estimated by conditional sum of squares.

The series is differenced d times, then an ARMA(p, q) with intercept is fit
to the differenced values by minimizing the sum of squared one-step
residuals. Residuals before time p are pinned at zero, so no likelihood or
backcasting machinery is needed. Optimization is derivative-free simplex
descent; the pure AR-free case (p = q = 0) has the closed-form minimizer
constant = mean, which is used directly. Forecasts undo the differencing by
adding back the last value of each differencing level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .. import kernels

ARIMA_SCHEMA = "htsf.arima.v1"

_MAX_ITER = 500
_TOL = 1e-8


class ArimaError(ValueError):
    """Raised for invalid orders, too-short histories, or diverged fits."""


@dataclass(frozen=True)
class ArimaModel:
    order: tuple[int, int, int]
    phi: np.ndarray
    theta: np.ndarray
    constant: float
    sigma2: float


def _check_order(order) -> tuple[int, int, int]:
    try:
        p, d, q = (int(v) for v in order)
    except (TypeError, ValueError) as exc:
        raise ArimaError(f"order must be three integers, got {order!r}") from exc
    if p < 0 or d < 0 or q < 0:
        raise ArimaError(f"order components must be non-negative, got {(p, d, q)}")
    return p, d, q


def _difference(y: np.ndarray, d: int) -> tuple[np.ndarray, list[float]]:
    """Difference d times, keeping the last value of each level for undoing."""
    last_values: list[float] = []
    w = y
    for _ in range(d):
        last_values.append(float(w[-1]))
        w = np.diff(w)
    return w, last_values


def arima_fit(history: np.ndarray, order=(1, 1, 1)) -> ArimaModel:
    p, d, q = _check_order(order)
    y = np.asarray(history, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < p + d + q + 2:
        raise ArimaError(
            f"history must hold at least {p + d + q + 2} points for order {(p, d, q)}"
        )
    if not np.all(np.isfinite(y)):
        raise ArimaError("history must be finite")
    w, _ = _difference(y, d)
    n = w.shape[0]

    if p == 0 and q == 0:
        c = float(np.mean(w))
        x = np.array([c])
    else:

        def objective(x):
            e = kernels.css_residuals(w, x[0], x[1 : 1 + p], x[1 + p :])
            sse = float(np.dot(e[p:], e[p:]))
            return sse if np.isfinite(sse) else np.inf

        x0 = np.zeros(1 + p + q)
        x0[0] = np.mean(w)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxiter": _MAX_ITER, "fatol": _TOL, "xatol": _TOL},
        )
        x = res.x

    phi = np.asarray(x[1 : 1 + p], dtype=np.float64)
    theta = np.asarray(x[1 + p :], dtype=np.float64)
    constant = float(x[0])
    e = kernels.css_residuals(w, constant, phi, theta)
    if not np.all(np.isfinite(e)):
        raise ArimaError("non-finite objective at the fitted coefficients")
    sse = float(np.dot(e[p:], e[p:]))
    sigma2 = sse / max(1, n - p)
    return ArimaModel(
        order=(p, d, q), phi=phi, theta=theta, constant=constant, sigma2=sigma2
    )


def arima_forecast(model: ArimaModel, history: np.ndarray) -> float:
    """One-step conditional expectation given the history."""
    p, d, q = model.order
    y = np.asarray(history, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < p + d + q + 2:
        raise ArimaError("history too short for this model order")
    w, last_values = _difference(y, d)
    e = kernels.css_residuals(w, model.constant, model.phi, model.theta)
    n = w.shape[0]
    w_hat = model.constant
    for i in range(p):
        w_hat += model.phi[i] * w[n - 1 - i]
    for j in range(q):
        w_hat += model.theta[j] * e[n - 1 - j]
    forecast = float(w_hat)
    for k in reversed(range(d)):
        forecast += last_values[k]
    return forecast


def arima_to_dict(model: ArimaModel) -> dict:
    return {
        "schema": ARIMA_SCHEMA,
        "order": list(model.order),
        "phi": model.phi.tolist(),
        "theta": model.theta.tolist(),
        "constant": model.constant,
        "sigma2": model.sigma2,
    }


def arima_from_dict(doc: dict) -> ArimaModel:
    if doc.get("schema") != ARIMA_SCHEMA:
        raise ArimaError(f"unsupported model schema {doc.get('schema')!r}")
    p, d, q = _check_order(doc["order"])
    return ArimaModel(
        order=(p, d, q),
        phi=np.asarray(doc["phi"], dtype=np.float64),
        theta=np.asarray(doc["theta"], dtype=np.float64),
        constant=float(doc["constant"]),
        sigma2=float(doc["sigma2"]),
    )


def save_arima(model: ArimaModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(arima_to_dict(model), f, sort_keys=True)
        f.write("\n")


def load_arima(path) -> ArimaModel:
    with open(path, encoding="utf-8") as f:
        return arima_from_dict(json.load(f))
