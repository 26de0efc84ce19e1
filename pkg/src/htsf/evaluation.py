"""Forecast scoring, aggregation, rank tests, and result rendering.

Scores are MASE values: mean absolute forecast error scaled by the series'
in-sample one-step naive mean absolute error. A flat training series has a
zero scale, which makes the score undefined (carried as NaN); undefined
scores are excluded from every aggregate with renormalized counts and an
exclusion tally.

Two aggregates summarize a model: the level average (mean over hierarchy
levels of the per-level hierarchy means) and the product average (mean over
hierarchies of each hierarchy's series mean). Significance between models
uses a multiple-comparison-with-the-best rank test at the 95 percent level.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from math import isnan, sqrt

import numpy as np
from scipy.stats import rankdata


class EvaluationError(ValueError):
    """Raised for empty groups, shape mismatches, or unsupported settings."""


# upper 5 percent studentized-range quantiles, infinite df, k = 2..20;
# standard published table values, pinned by a test against scipy
_Q_TABLE_05 = {
    2: 2.772,
    3: 3.314,
    4: 3.633,
    5: 3.858,
    6: 4.030,
    7: 4.170,
    8: 4.286,
    9: 4.387,
    10: 4.474,
    11: 4.552,
    12: 4.622,
    13: 4.685,
    14: 4.743,
    15: 4.796,
    16: 4.845,
    17: 4.891,
    18: 4.934,
    19: 4.974,
    20: 5.012,
}


@dataclass(frozen=True)
class MaseScore:
    hierarchy_id: str
    node_id: str
    level: int
    value: float

    @property
    def defined(self) -> bool:
        return not isnan(self.value)


def mase(train_series, actuals, forecasts) -> float:
    """MASE of a forecast block; NaN when the naive scale is zero."""
    train = np.asarray(train_series, dtype=np.float64)
    actual = np.asarray(actuals, dtype=np.float64)
    forecast = np.asarray(forecasts, dtype=np.float64)
    if train.ndim != 1 or train.shape[0] < 2:
        raise EvaluationError("training series must hold at least 2 points")
    if actual.shape != forecast.shape or actual.ndim != 1 or actual.shape[0] == 0:
        raise EvaluationError("actuals and forecasts must be equal-length vectors")
    scale = float(np.mean(np.abs(np.diff(train))))
    if scale == 0.0:
        return float("nan")
    return float(np.mean(np.abs(actual - forecast))) / scale


def naive_scale(train_series) -> float:
    """The MASE denominator: in-sample one-step naive mean absolute error."""
    train = np.asarray(train_series, dtype=np.float64)
    if train.ndim != 1 or train.shape[0] < 2:
        raise EvaluationError("training series must hold at least 2 points")
    return float(np.mean(np.abs(np.diff(train))))


def undefined_count(scores: list[MaseScore]) -> int:
    return sum(1 for s in scores if not s.defined)


def _grouped(scores: list[MaseScore]) -> dict[str, dict[int, list[float]]]:
    by_hier: dict[str, dict[int, list[float]]] = {}
    for s in scores:
        by_hier.setdefault(s.hierarchy_id, {}).setdefault(s.level, []).append(s.value)
    return by_hier


def level_means(scores: list[MaseScore]) -> dict[int, float]:
    """Per-level means, each the mean over hierarchies of that level's series mean."""
    if not scores:
        raise EvaluationError("no scores to aggregate")
    by_hier = _grouped(scores)
    levels = sorted({s.level for s in scores})
    out: dict[int, float] = {}
    for level in levels:
        hier_means = []
        for hid in sorted(by_hier):
            values = [v for v in by_hier[hid].get(level, []) if not isnan(v)]
            if values:
                hier_means.append(float(np.mean(values)))
        if not hier_means:
            raise EvaluationError(f"level {level} has no defined scores")
        out[level] = float(np.mean(hier_means))
    return out


def avg_levels(scores: list[MaseScore]) -> float:
    """Mean over levels of (mean over hierarchies of (mean over level series))."""
    means = level_means(scores)
    return float(np.mean([means[level] for level in sorted(means)]))


def avg_products(scores: list[MaseScore]) -> float:
    """Mean over hierarchies of each hierarchy's mean series score."""
    if not scores:
        raise EvaluationError("no scores to aggregate")
    by_hier: dict[str, list[float]] = {}
    for s in scores:
        by_hier.setdefault(s.hierarchy_id, []).append(s.value)
    hier_means = []
    for hid in sorted(by_hier):
        values = [v for v in by_hier[hid] if not isnan(v)]
        if not values:
            raise EvaluationError(f"hierarchy {hid!r} has no defined scores")
        hier_means.append(float(np.mean(values)))
    return float(np.mean(hier_means))


@dataclass(frozen=True)
class McbResult:
    models: tuple[str, ...]
    mean_ranks: np.ndarray
    half_width: float
    best_index: int
    significant: tuple[bool, ...]
    n_observations: int


def mcb_test(score_matrix, models, alpha: float = 0.05) -> McbResult:
    """Rank-based multiple comparison with the best model.

    score_matrix is N observations x k models; rows containing an undefined
    score are dropped. Each row is ranked (ties averaged), the interval
    around each mean rank has half-width 0.5 * q_{alpha,k} * sqrt(k(k+1)/(6N)),
    and a model is significantly worse than the best when the two intervals
    do not overlap.
    """
    if alpha != 0.05:
        raise EvaluationError("only alpha = 0.05 is supported (embedded table)")
    mat = np.asarray(score_matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise EvaluationError("score matrix must be 2-D")
    models = tuple(models)
    k = mat.shape[1]
    if k != len(models):
        raise EvaluationError("model names must match matrix columns")
    if k < 2:
        raise EvaluationError("need at least 2 models")
    if k > max(_Q_TABLE_05):
        raise EvaluationError(f"at most {max(_Q_TABLE_05)} models supported")
    mat = mat[~np.isnan(mat).any(axis=1)]
    n = mat.shape[0]
    if n < 2:
        raise EvaluationError("need at least 2 complete observation rows")
    ranks = np.vstack([rankdata(row, method="average") for row in mat])
    mean_ranks = ranks.mean(axis=0)
    half_width = 0.5 * _Q_TABLE_05[k] * sqrt(k * (k + 1) / (6.0 * n))
    best = int(np.argmin(mean_ranks))
    best_hi = mean_ranks[best] + half_width
    significant = tuple(
        bool(mean_ranks[i] - half_width > best_hi) for i in range(k)
    )
    return McbResult(
        models=models,
        mean_ranks=mean_ranks,
        half_width=half_width,
        best_index=best,
        significant=significant,
        n_observations=n,
    )


@dataclass(frozen=True)
class DistributionStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    whisker_lo: float
    whisker_hi: float


def distribution_stats(values) -> DistributionStats:
    """Five-number summary plus whiskers at the most extreme points inside
    the 1.5 IQR fences. Quartiles interpolate linearly between order
    statistics."""
    arr = np.asarray([v for v in np.ravel(values) if not isnan(v)], dtype=np.float64)
    if arr.shape[0] == 0:
        raise EvaluationError("empty group")
    q1, med, q3 = (float(q) for q in np.quantile(arr, [0.25, 0.5, 0.75]))
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    return DistributionStats(
        minimum=float(arr.min()),
        q1=q1,
        median=med,
        q3=q3,
        maximum=float(arr.max()),
        whisker_lo=float(arr[arr >= lo_fence].min()),
        whisker_hi=float(arr[arr <= hi_fence].max()),
    )


@dataclass(frozen=True)
class ReportRow:
    label: str
    top: float
    middle: float | None
    bottom: float
    avg_levels: float
    avg_products: float
    undefined: int = 0


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]


def build_report_row(label: str, scores: list[MaseScore]) -> ReportRow:
    means = level_means(scores)
    levels = sorted(means)
    middle_values = [means[j] for j in levels[1:-1]]
    return ReportRow(
        label=label,
        top=means[levels[0]],
        middle=float(np.mean(middle_values)) if middle_values else None,
        bottom=means[levels[-1]],
        avg_levels=avg_levels(scores),
        avg_products=avg_products(scores),
        undefined=undefined_count(scores),
    )


def format4(value: float) -> str:
    """Render with exactly 4 decimals, decimal-string half-up rounding."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.0001"), ROUND_HALF_UP))


def render_results_table(report: EvaluationReport) -> str:
    lines = ["Model,TopLevel,MiddleLevel,BottomLevel,AvgLevels,AvgProducts"]
    for row in report.rows:
        middle = "" if row.middle is None else format4(row.middle)
        lines.append(
            ",".join(
                [
                    row.label,
                    format4(row.top),
                    middle,
                    format4(row.bottom),
                    format4(row.avg_levels),
                    format4(row.avg_products),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_mcb_csv(result: McbResult) -> str:
    lines = ["model,mean_rank,lo,hi,significant_vs_best"]
    for i, model in enumerate(result.models):
        rank = float(result.mean_ranks[i])
        lines.append(
            ",".join(
                [
                    model,
                    format4(rank),
                    format4(rank - result.half_width),
                    format4(rank + result.half_width),
                    "true" if result.significant[i] else "false",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_boxplot_csv(rows: list[tuple[str, int, DistributionStats]]) -> str:
    lines = ["model,level,min,q1,median,q3,max"]
    for model, level, stats in rows:
        lines.append(
            ",".join(
                [
                    model,
                    str(level),
                    format4(stats.minimum),
                    format4(stats.q1),
                    format4(stats.median),
                    format4(stats.q3),
                    format4(stats.maximum),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_mcb_svg(result: McbResult) -> str:
    """Self-contained SVG of the mean-rank intervals, best interval shaded."""
    k = len(result.models)
    width, row_h, top_pad, left_pad, right_pad = 640, 28, 48, 150, 30
    height = top_pad + row_h * k + 30
    lo = min(float(r) - result.half_width for r in result.mean_ranks)
    hi = max(float(r) + result.half_width for r in result.mean_ranks)
    span = (hi - lo) or 1.0
    lo -= 0.05 * span
    hi += 0.05 * span

    def sx(v: float) -> float:
        return left_pad + (v - lo) / (hi - lo) * (width - left_pad - right_pad)

    best_rank = float(result.mean_ranks[result.best_index])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{left_pad}" y="20" font-size="14">Mean ranks with 95% MCB intervals '
        f"(N={result.n_observations})</text>",
        f'<rect x="{sx(best_rank - result.half_width):.2f}" y="{top_pad - 10}" '
        f'width="{sx(best_rank + result.half_width) - sx(best_rank - result.half_width):.2f}" '
        f'height="{row_h * k + 10}" fill="#dddddd"/>',
    ]
    for i, model in enumerate(result.models):
        y = top_pad + row_h * i + row_h // 2
        rank = float(result.mean_ranks[i])
        x0, x1, xm = sx(rank - result.half_width), sx(rank + result.half_width), sx(rank)
        color = "#c0392b" if result.significant[i] else "#2c3e50"
        parts.append(f'<text x="8" y="{y + 4}">{model}</text>')
        parts.append(
            f'<line x1="{x0:.2f}" y1="{y}" x2="{x1:.2f}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        for xt in (x0, x1):
            parts.append(
                f'<line x1="{xt:.2f}" y1="{y - 5}" x2="{xt:.2f}" y2="{y + 5}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
        parts.append(f'<circle cx="{xm:.2f}" cy="{y}" r="3.5" fill="{color}"/>')
        parts.append(
            f'<text x="{x1 + 8:.2f}" y="{y + 4}" fill="{color}">{format4(rank)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
