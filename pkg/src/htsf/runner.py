"""End-to-end pipeline: ingest, embed, forecast, reconcile, evaluate, persist.

A run writes one artifact directory:

    config.json         exact configuration snapshot
    forecasts.csv       hierarchy_id,node_id,step,model,reconciliation,forecast,actual
    scaling.csv         hierarchy_id,node_id,level,scale (MASE denominators)
    results_table.csv   one row per model x reconciliation
    mcb.csv, mcb.svg    rank test over series-level scores
    boxplot.csv         five-number summaries per model x level
    models/*.json       trained tree ensembles
    run_log.jsonl       per-stage wall time and row counts

Evaluation is a pure function of forecasts.csv plus scaling.csv, so `report`
can regenerate every derived file from a finished artifact without
retraining, byte for byte.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

import numpy as np

from .config import RunConfig, config_snapshot
from .data import PanelDataset, build_dataset, load_sales_csv
from .evaluation import (
    EvaluationError,
    EvaluationReport,
    MaseScore,
    McbResult,
    build_report_row,
    distribution_stats,
    mcb_test,
    naive_scale,
    render_boxplot_csv,
    render_mcb_csv,
    render_mcb_svg,
    render_results_table,
)
from .forecasters import GbdtParams, gbdt_to_dict
from .hierarchy import load_bottom_order, load_hierarchy_edges, build_hierarchy
from .reconcile import (
    dump_debug_matrices,
    g_bottom_up,
    g_mint_structural,
    g_top_down,
    reconcile,
)
from .scopes import (
    ForecastSet,
    HyperGrid,
    Scope,
    grid_search,
    produce_base_forecasts,
    resolve_workers,
)

MODEL_ORDER = ("ES", "ARIMA", "loc", "nfg", "fg")
REC_ORDER = ("none", "BU", "TD", "MinT")

_FAMILY_SPECS = {
    "es": ("es", None),
    "arima": ("arima", None),
    "gbdt-local": ("gbdt", Scope.LOCAL),
    "gbdt-nfg": ("gbdt", Scope.PER_HIERARCHY),
    "gbdt-fg": ("gbdt", Scope.GLOBAL),
}
_REC_TAGS = {"none": "none", "bu": "BU", "td": "TD", "mint": "MinT"}


class RunnerError(ValueError):
    """Raised for unusable artifacts and stage-level failures."""


@dataclass(frozen=True)
class ForecastRecord:
    hierarchy_id: str
    node_id: str
    step: int
    model: str
    reconciliation: str
    forecast: float
    actual: float


@dataclass(frozen=True)
class RunResult:
    output_dir: Path
    report: EvaluationReport
    mcb: McbResult | None
    table_text: str


class _StageLog:
    def __init__(self, path: Path):
        self.path = path
        path.write_text("", encoding="utf-8")

    def stage(self, name: str):
        log = self

        class _Timer:
            def __enter__(self):
                self.start = time.perf_counter()
                self.rows = 0
                return self

            def __exit__(self, exc_type, exc, tb):
                if exc is not None:
                    if isinstance(exc, ValueError):
                        raise type(exc)(f"[stage {name}] {exc}") from exc
                    return False
                wall_ms = int((time.perf_counter() - self.start) * 1000)
                with open(log.path, "a", encoding="utf-8") as f:
                    f.write(
                        json.dumps(
                            {"stage": name, "wall_ms": wall_ms, "rows": self.rows},
                            sort_keys=True,
                        )
                        + "\n"
                    )

        return _Timer()


def _label(model: str, rec: str) -> str:
    return model if rec == "none" else f"{rec}_{model}"


def _ordered_labels(pairs) -> list[tuple[str, str]]:
    present = set(pairs)
    return [
        (model, rec)
        for model in MODEL_ORDER
        for rec in REC_ORDER
        if (model, rec) in present
    ]


def _gbdt_params_from_config(config: RunConfig) -> GbdtParams:
    overrides = config.gbdt or {}
    return GbdtParams(**overrides)


def _reconcile_set(base: ForecastSet, rec_tag: str, dataset: PanelDataset,
                   mappings: dict[str, dict]) -> ForecastSet:
    h = dataset.hierarchy
    out: dict[tuple[str, str], np.ndarray] = {}
    for hid in dataset.hierarchy_ids:
        stacked = np.vstack([base.forecasts[(hid, node)] for node in h.nodes])
        G = mappings[rec_tag][hid]
        coherent = reconcile(G, dataset.S, stacked)
        for i, node in enumerate(h.nodes):
            out[(hid, node)] = coherent[i]
    fs = ForecastSet(model=base.model, reconciliation=rec_tag, forecasts=out)
    fs.validate(dataset.holdout)
    return fs


def _records_from_sets(dataset: PanelDataset, sets: list[ForecastSet]) -> list[ForecastRecord]:
    records = []
    ordered = {(fs.model, fs.reconciliation): fs for fs in sets}
    for model, rec in _ordered_labels(ordered):
        fs = ordered[(model, rec)]
        for hid in dataset.hierarchy_ids:
            for node in dataset.hierarchy.nodes:
                key = (hid, node)
                actual = dataset.test_values(key)
                forecast = fs.forecasts[key]
                for step in range(dataset.holdout):
                    records.append(
                        ForecastRecord(
                            hierarchy_id=hid,
                            node_id=node,
                            step=step + 1,
                            model=model,
                            reconciliation=rec,
                            forecast=float(forecast[step]),
                            actual=float(actual[step]),
                        )
                    )
    return records


def write_forecasts_csv(path, records: list[ForecastRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["hierarchy_id", "node_id", "step", "model", "reconciliation",
             "forecast", "actual"]
        )
        for r in records:
            writer.writerow(
                [r.hierarchy_id, r.node_id, r.step, r.model, r.reconciliation,
                 repr(r.forecast), repr(r.actual)]
            )


def read_forecasts_csv(path) -> list[ForecastRecord]:
    expected = ["hierarchy_id", "node_id", "step", "model", "reconciliation",
                "forecast", "actual"]
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != expected:
            raise RunnerError(f"{path}: unexpected header {header}")
        return [
            ForecastRecord(
                hierarchy_id=row[0],
                node_id=row[1],
                step=int(row[2]),
                model=row[3],
                reconciliation=row[4],
                forecast=float(row[5]),
                actual=float(row[6]),
            )
            for row in reader
        ]


def write_scaling_csv(path, dataset: PanelDataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["hierarchy_id", "node_id", "level", "scale"])
        for hid in dataset.hierarchy_ids:
            for node in dataset.hierarchy.nodes:
                scale = naive_scale(dataset.train_values((hid, node)))
                writer.writerow(
                    [hid, node, dataset.hierarchy.level_of[node], repr(scale)]
                )


def read_scaling_csv(path) -> dict[tuple[str, str], tuple[int, float]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["hierarchy_id", "node_id", "level", "scale"]:
            raise RunnerError(f"{path}: unexpected header {header}")
        return {(row[0], row[1]): (int(row[2]), float(row[3])) for row in reader}


def evaluate_records(
    records: list[ForecastRecord],
    scaling: dict[tuple[str, str], tuple[int, float]],
):
    """Scores, table rows, rank test, and boxplot rows from raw records."""
    by_label: dict[tuple[str, str], dict[tuple[str, str], list[ForecastRecord]]] = {}
    for r in records:
        by_label.setdefault((r.model, r.reconciliation), {}).setdefault(
            (r.hierarchy_id, r.node_id), []
        ).append(r)
    labels = _ordered_labels(by_label)
    if not labels:
        raise RunnerError("no forecast records to evaluate")
    unknown = set(by_label) - set(labels)
    if unknown:
        raise RunnerError(f"unknown model/reconciliation tags: {sorted(unknown)}")

    scores_by_label: dict[tuple[str, str], list[MaseScore]] = {}
    for label in labels:
        scores = []
        for key in sorted(by_label[label]):
            rows = sorted(by_label[label][key], key=lambda r: r.step)
            level, scale = scaling[key]
            err = float(np.mean([abs(r.actual - r.forecast) for r in rows]))
            value = err / scale if scale != 0.0 else float("nan")
            scores.append(
                MaseScore(hierarchy_id=key[0], node_id=key[1], level=level, value=value)
            )
        scores_by_label[label] = scores

    report = EvaluationReport(
        rows=tuple(
            build_report_row(_label(*label), scores_by_label[label])
            for label in labels
        )
    )

    mcb = None
    if len(labels) >= 2:
        keys = sorted({(s.hierarchy_id, s.node_id) for s in scores_by_label[labels[0]]})
        matrix = np.array(
            [
                [
                    {(s.hierarchy_id, s.node_id): s.value for s in scores_by_label[label]}[key]
                    for label in labels
                ]
                for key in keys
            ]
        )
        try:
            mcb = mcb_test(matrix, [_label(*label) for label in labels])
        except EvaluationError:
            mcb = None  # too few complete rows; the CSV stays header-only

    boxplot_rows = []
    for label in labels:
        by_level: dict[int, list[float]] = {}
        for s in scores_by_label[label]:
            if s.defined:
                by_level.setdefault(s.level, []).append(s.value)
        for level in sorted(by_level):
            boxplot_rows.append(
                (_label(*label), level, distribution_stats(by_level[level]))
            )
    return report, mcb, boxplot_rows


def _write_evaluation_files(out: Path, report, mcb, boxplot_rows) -> str:
    table_text = render_results_table(report)
    (out / "results_table.csv").write_text(table_text, encoding="utf-8")
    if mcb is not None:
        (out / "mcb.csv").write_text(render_mcb_csv(mcb), encoding="utf-8")
        (out / "mcb.svg").write_text(render_mcb_svg(mcb), encoding="utf-8")
    else:
        (out / "mcb.csv").write_text(
            "model,mean_rank,lo,hi,significant_vs_best\n", encoding="utf-8"
        )
        (out / "mcb.svg").write_text(
            '<svg xmlns="http://www.w3.org/2000/svg" width="320" height="40">'
            '<text x="10" y="25">not enough complete scores for a rank test</text>'
            "</svg>\n",
            encoding="utf-8",
        )
    (out / "boxplot.csv").write_text(render_boxplot_csv(boxplot_rows), encoding="utf-8")
    return table_text


def run_pipeline(config: RunConfig) -> RunResult:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    log = _StageLog(out / "run_log.jsonl")
    workers = resolve_workers(config.workers)

    with log.stage("load") as stage:
        edges = load_hierarchy_edges(config.hierarchy_edges)
        bottom_order = load_bottom_order(config.bottom_order)
        hierarchy = build_hierarchy(edges, bottom_order)
        panel = load_sales_csv(config.sales_csv)
        stage.rows = sum(v.shape[0] for v in panel.series.values())

    with log.stage("embed") as stage:
        dataset = build_dataset(
            panel, hierarchy, lags=config.lags, holdout=config.holdout
        )
        stage.rows = sum(em.row_count for em in dataset.embeddings.values())

    base_params = _gbdt_params_from_config(config)
    sets: list[ForecastSet] = []
    all_models: dict[str, dict] = {}
    for family in config.families:
        kind, scope = _FAMILY_SPECS[family]
        with log.stage(f"train_forecast:{family}") as stage:
            params = base_params
            if kind == "gbdt" and config.grid_search:
                params = grid_search(
                    scope, HyperGrid(), dataset, base_params,
                    seed=config.seed, workers=workers,
                )
            fs, models = produce_base_forecasts(
                kind, scope, dataset, params=params,
                seed=config.seed, workers=workers,
            )
            sets.append(fs)
            for unit_key, model in models.items():
                all_models[f"{family}__{quote(unit_key, safe='')}"] = gbdt_to_dict(model)
            stage.rows = len(fs.forecasts) * dataset.holdout

    rec_tags = [_REC_TAGS[r] for r in config.reconciliations if _REC_TAGS[r] != "none"]
    with log.stage("reconcile") as stage:
        mappings: dict[str, dict] = {}
        if rec_tags:
            h = dataset.hierarchy
            for tag in rec_tags:
                per_hier = {}
                for hid in dataset.hierarchy_ids:
                    if tag == "BU":
                        per_hier[hid] = g_bottom_up(h)
                    elif tag == "TD":
                        frames = {
                            node: dataset.train_values((hid, node)) for node in h.nodes
                        }
                        per_hier[hid] = g_top_down(h, frames)
                    else:
                        per_hier[hid] = g_mint_structural(h)
                mappings[tag] = per_hier
        reconciled = [
            _reconcile_set(fs, tag, dataset, mappings)
            for fs in list(sets)
            for tag in rec_tags
        ]
        sets.extend(reconciled)
        stage.rows = sum(len(fs.forecasts) * dataset.holdout for fs in reconciled)
        if config.dump_matrices and rec_tags:
            first = dataset.hierarchy_ids[0]
            dump_debug_matrices(
                out / "matrices",
                dataset.hierarchy,
                {tag: mappings[tag][first] for tag in rec_tags},
            )

    with log.stage("evaluate") as stage:
        records = _records_from_sets(dataset, sets)
        write_forecasts_csv(out / "forecasts.csv", records)
        write_scaling_csv(out / "scaling.csv", dataset)
        scaling = read_scaling_csv(out / "scaling.csv")
        report, mcb, boxplot_rows = evaluate_records(records, scaling)
        stage.rows = len(records)

    with log.stage("persist") as stage:
        (out / "config.json").write_text(config_snapshot(config), encoding="utf-8")
        for name, doc in all_models.items():
            with open(out / "models" / f"{name}.json", "w", encoding="utf-8") as f:
                json.dump(doc, f, sort_keys=True)
                f.write("\n")
        table_text = _write_evaluation_files(out, report, mcb, boxplot_rows)
        stage.rows = len(all_models) + 6

    return RunResult(output_dir=out, report=report, mcb=mcb, table_text=table_text)


def report_artifact(artifact_dir) -> RunResult:
    """Regenerate every derived file from persisted forecasts alone."""
    out = Path(artifact_dir)
    for required in ("forecasts.csv", "scaling.csv"):
        if not (out / required).exists():
            raise RunnerError(f"incomplete artifact: missing {required}")
    records = read_forecasts_csv(out / "forecasts.csv")
    if not records:
        raise RunnerError("incomplete artifact: forecasts.csv has no rows")
    scaling = read_scaling_csv(out / "scaling.csv")
    report, mcb, boxplot_rows = evaluate_records(records, scaling)
    table_text = _write_evaluation_files(out, report, mcb, boxplot_rows)
    return RunResult(output_dir=out, report=report, mcb=mcb, table_text=table_text)
