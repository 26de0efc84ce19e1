"""Training-matrix assembly, hyperparameter search, and base forecasts.

Three information scopes control what a boosted-tree model sees: LOCAL trains
one model per series, PER_HIERARCHY pools the rows of every node in one
hierarchy, GLOBAL pools every node of every hierarchy. Baselines (smoothing
and ARIMA) are window models: each test row fits a fresh model on its own 61
observed values and forecasts one step.

Every test forecast reads actual history from the embedding row, never a
previous forecast, so multi-step error feedback cannot occur. Tasks fan out
over a thread pool with per-task generator seeds derived from the run seed
and a stable task key, making results identical at any worker count.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .data import PanelDataset
from .evaluation import mase
from .forecasters import (
    GbdtModel,
    GbdtParams,
    arima_fit,
    arima_forecast,
    fit_gbdt,
    predict_gbdt,
    ses_fit,
    ses_forecast,
)


class ScopeError(ValueError):
    """Raised for unknown targets, insufficient rows, or bad families."""


class Scope(Enum):
    LOCAL = "local"
    PER_HIERARCHY = "per_hierarchy"
    GLOBAL = "global"


SCOPE_TAGS = {Scope.LOCAL: "loc", Scope.PER_HIERARCHY: "nfg", Scope.GLOBAL: "fg"}

ARIMA_DEFAULT_ORDER = (1, 1, 1)


@dataclass(frozen=True)
class TrainingMatrix:
    X: np.ndarray
    y: np.ndarray
    provenance: tuple[tuple[str, str, int], ...]


@dataclass(frozen=True)
class HyperGrid:
    learning_rates: tuple[float, ...] = (0.01, 0.03, 0.05, 0.07, 0.09, 0.11)
    feature_fractions: tuple[float, ...] = (0.3, 0.5, 0.7)

    def candidates(self) -> list[tuple[float, float]]:
        return [
            (lr, ff) for lr in self.learning_rates for ff in self.feature_fractions
        ]


@dataclass(frozen=True)
class ForecastSet:
    """Per-series one-step forecasts over the holdout window."""

    model: str
    reconciliation: str
    forecasts: dict[tuple[str, str], np.ndarray]

    def validate(self, holdout: int) -> None:
        for key, values in self.forecasts.items():
            if values.shape != (holdout,):
                raise ScopeError(f"series {key} must carry {holdout} forecasts")
            if not np.all(np.isfinite(values)):
                raise ScopeError(f"series {key} produced non-finite forecasts")


def derive_seed(seed: int, key: str) -> int:
    """Stable per-task seed: run seed xor a digest of the task key."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & 0x7FFFFFFFFFFFFFFF


def resolve_workers(configured: int | None = None) -> int:
    env = os.environ.get("HTSF_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ScopeError(f"HTSF_THREADS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ScopeError("HTSF_THREADS must be >= 1")
        return value
    if configured is not None:
        if configured < 1:
            raise ScopeError("worker count must be >= 1")
        return configured
    return os.cpu_count() or 1


def _map_tasks(fn, tasks, workers: int):
    """Run tasks on a pool; results come back in task order regardless of
    completion order, keeping every downstream reduction deterministic."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _series_keys_for(dataset: PanelDataset, scope: Scope, target) -> list[tuple[str, str]]:
    nodes = dataset.hierarchy.nodes
    if scope is Scope.LOCAL:
        if target not in dataset.frames:
            raise ScopeError(f"unknown series target {target!r}")
        return [target]
    if scope is Scope.PER_HIERARCHY:
        if target not in dataset.hierarchy_ids:
            raise ScopeError(f"unknown hierarchy target {target!r}")
        return [(target, node) for node in nodes]
    if scope is Scope.GLOBAL:
        return [(hid, node) for hid in dataset.hierarchy_ids for node in nodes]
    raise ScopeError(f"unknown scope {scope!r}")


def assemble_training_matrix(
    scope: Scope, dataset: PanelDataset, target=None, trim_last: int = 0
) -> TrainingMatrix:
    """Stack training rows for one scope target.

    Row order is hierarchy id, then hierarchy node order, then time.
    trim_last drops that many final training rows per series, which is how
    the grid search carves out its validation window.
    """
    keys = _series_keys_for(dataset, scope, target)
    blocks_X, blocks_y, provenance = [], [], []
    for key in keys:
        em = dataset.embeddings[key]
        rows = dataset.splits[key].train_rows
        if trim_last:
            rows = rows[:-trim_last]
        blocks_X.append(em.X[rows])
        blocks_y.append(em.y[rows])
        provenance.extend((key[0], key[1], int(em.target_t[r])) for r in rows)
    if not blocks_X or sum(b.shape[0] for b in blocks_X) == 0:
        raise ScopeError("empty training matrix")
    return TrainingMatrix(
        X=np.vstack(blocks_X), y=np.concatenate(blocks_y), provenance=tuple(provenance)
    )


def _unit_targets(scope: Scope, dataset: PanelDataset) -> list:
    if scope is Scope.LOCAL:
        return dataset.series_keys()
    if scope is Scope.PER_HIERARCHY:
        return list(dataset.hierarchy_ids)
    return [None]


def grid_search(
    scope: Scope,
    grid: HyperGrid,
    dataset: PanelDataset,
    base_params: GbdtParams | None = None,
    seed: int = 0,
    workers: int = 1,
) -> GbdtParams:
    """Pick (learning_rate, feature_fraction) by mean validation MASE.

    The last ``holdout``-many training rows of every series form an internal
    validation window; each candidate trains on the remainder and forecasts
    that window. Ties take the lower learning rate, then the lower feature
    fraction. Series whose validation MASE is undefined are skipped; a
    candidate with no defined score at all ranks last.
    """
    base = base_params if base_params is not None else GbdtParams()
    val_len = dataset.holdout
    for key in dataset.series_keys():
        n_train = dataset.splits[key].train_rows.shape[0]
        if n_train < 2 * val_len:
            raise ScopeError(
                f"series {key} has {n_train} training rows; grid search needs "
                f"at least {2 * val_len}"
            )
    tag = SCOPE_TAGS[scope]
    units = _unit_targets(scope, dataset)

    def evaluate_candidate(candidate: tuple[float, float]) -> float:
        lr, ff = candidate

        def run_unit(unit):
            matrix = assemble_training_matrix(scope, dataset, unit, trim_last=val_len)
            params = replace(
                base,
                learning_rate=lr,
                feature_fraction=ff,
                seed=derive_seed(seed, f"grid|{tag}|{unit}|{lr!r}|{ff!r}"),
            )
            model = fit_gbdt(matrix.X, matrix.y, params)
            scores = []
            for key in _series_keys_for(dataset, scope, unit):
                em = dataset.embeddings[key]
                rows = dataset.splits[key].train_rows[-val_len:]
                pred = predict_gbdt(model, em.X[rows])
                history = dataset.frames[key][: -(dataset.holdout + val_len)]
                scores.append(mase(history, em.y[rows], pred))
            return scores

        all_scores = [s for unit_scores in _map_tasks(run_unit, units, workers)
                      for s in unit_scores]
        defined = [s for s in all_scores if not np.isnan(s)]
        return float(np.mean(defined)) if defined else float("inf")

    best_score = float("inf")
    best = (grid.learning_rates[0], grid.feature_fractions[0])
    for candidate in grid.candidates():
        score = evaluate_candidate(candidate)
        if score < best_score:
            best_score = score
            best = candidate
    return replace(base, learning_rate=best[0], feature_fraction=best[1])


def _window_forecasts(dataset: PanelDataset, key, fit_window) -> np.ndarray:
    em = dataset.embeddings[key]
    rows = dataset.splits[key].test_rows
    return np.array([fit_window(em.X[r]) for r in rows])


def produce_base_forecasts(
    family: str,
    scope: Scope | None,
    dataset: PanelDataset,
    params: GbdtParams | None = None,
    seed: int = 0,
    workers: int = 1,
) -> tuple[ForecastSet, dict[str, GbdtModel]]:
    """Forecast every series' holdout window with one model family.

    family is "es", "arima", or "gbdt" (which requires a scope). Returns the
    forecast set and, for gbdt, the trained models keyed by their unit.
    """
    keys = dataset.series_keys()
    holdout = dataset.holdout

    if family == "es":

        def es_series(key):
            return _window_forecasts(
                dataset, key, lambda w: ses_forecast(w, ses_fit(w).alpha)
            )

        forecasts = dict(zip(keys, _map_tasks(es_series, keys, workers)))
        fs = ForecastSet(model="ES", reconciliation="none", forecasts=forecasts)
        fs.validate(holdout)
        return fs, {}

    if family == "arima":

        def arima_series(key):
            return _window_forecasts(
                dataset,
                key,
                lambda w: arima_forecast(arima_fit(w, ARIMA_DEFAULT_ORDER), w),
            )

        forecasts = dict(zip(keys, _map_tasks(arima_series, keys, workers)))
        fs = ForecastSet(model="ARIMA", reconciliation="none", forecasts=forecasts)
        fs.validate(holdout)
        return fs, {}

    if family != "gbdt":
        raise ScopeError(f"unknown model family {family!r}")
    if scope is None:
        raise ScopeError("gbdt forecasts need a scope")
    base = params if params is not None else GbdtParams()
    tag = SCOPE_TAGS[scope]
    units = _unit_targets(scope, dataset)

    def run_unit(unit):
        matrix = assemble_training_matrix(scope, dataset, unit)
        unit_params = replace(base, seed=derive_seed(seed, f"{tag}|{unit}"))
        model = fit_gbdt(matrix.X, matrix.y, unit_params)
        out = {}
        for key in _series_keys_for(dataset, scope, unit):
            em = dataset.embeddings[key]
            rows = dataset.splits[key].test_rows
            out[key] = predict_gbdt(model, em.X[rows])
        return unit, model, out

    forecasts: dict[tuple[str, str], np.ndarray] = {}
    models: dict[str, GbdtModel] = {}
    for unit, model, out in _map_tasks(run_unit, units, workers):
        unit_key = "all" if unit is None else (
            unit if isinstance(unit, str) else f"{unit[0]}|{unit[1]}"
        )
        models[unit_key] = model
        forecasts.update(out)
    forecasts = {key: forecasts[key] for key in keys}
    fs = ForecastSet(model=tag, reconciliation="none", forecasts=forecasts)
    fs.validate(holdout)
    return fs, models
