"""Simple exponential smoothing with grid-fitted alpha.

The smoothed level starts at the first observation and updates as
level = alpha * y_t + (1 - alpha) * level; the one-step forecast is the
final level. Alpha is chosen by in-sample one-step squared error over the
grid {0.01, 0.02, ..., 0.99}, ties going to the smallest alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

SES_SCHEMA = "htsf.ses.v1"

_ALPHA_GRID = np.arange(1, 100, dtype=np.float64) / 100.0


class SesError(ValueError):
    """Raised for an invalid alpha or unusable history."""


@dataclass(frozen=True)
class SesParams:
    alpha: float

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise SesError(f"alpha must lie in [0, 1], got {self.alpha}")


def ses_forecast(history: np.ndarray, alpha: float) -> float:
    """One-step forecast after smoothing the full history."""
    SesParams(alpha).validate()
    y = np.asarray(history, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] == 0:
        raise SesError("history must be a non-empty 1-D vector")
    level = y[0]
    for t in range(1, y.shape[0]):
        level = alpha * y[t] + (1.0 - alpha) * level
    return float(level)


def ses_fit(history: np.ndarray) -> SesParams:
    """Pick the grid alpha minimizing in-sample one-step squared error."""
    y = np.asarray(history, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < 3:
        raise SesError("history must hold at least 3 points")
    # run the recursion for all 99 alphas at once, same update expression
    # as the scalar path so the two agree bitwise
    level = np.full(_ALPHA_GRID.shape[0], y[0])
    sse = np.zeros(_ALPHA_GRID.shape[0])
    for t in range(1, y.shape[0]):
        err = y[t] - level
        sse += err * err
        level = _ALPHA_GRID * y[t] + (1.0 - _ALPHA_GRID) * level
    return SesParams(alpha=float(_ALPHA_GRID[int(np.argmin(sse))]))


def ses_to_dict(params: SesParams) -> dict:
    return {"schema": SES_SCHEMA, "alpha": params.alpha}


def ses_from_dict(doc: dict) -> SesParams:
    if doc.get("schema") != SES_SCHEMA:
        raise SesError(f"unsupported model schema {doc.get('schema')!r}")
    params = SesParams(alpha=float(doc["alpha"]))
    params.validate()
    return params


def save_ses(params: SesParams, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(ses_to_dict(params), f, sort_keys=True)
        f.write("\n")


def load_ses(path) -> SesParams:
    with open(path, encoding="utf-8") as f:
        return ses_from_dict(json.load(f))
