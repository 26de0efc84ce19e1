"""Hierarchical time-series forecasting toolkit.

Builds one-step base forecasts for every node of an aggregation hierarchy
with window baselines (exponential smoothing, ARIMA) and gradient-boosted
trees trained at three information scopes (per series, per hierarchy,
fully pooled), projects them onto the coherent subspace with bottom-up,
top-down, or structural minimum-trace mappings, and scores everything with
MASE aggregates, rank-based significance tests, and distribution summaries.
"""

from .config import ConfigError, RunConfig, load_config
from .data import (
    DataError,
    EmbeddingMatrix,
    PanelDataset,
    SalesPanel,
    SeriesFrame,
    SplitSpec,
    build_dataset,
    build_embedding,
    load_embedding_matrix,
    load_sales_csv,
    save_embedding_matrix,
    split_holdout,
    to_hierarchy_series,
)
from .evaluation import (
    DistributionStats,
    EvaluationError,
    EvaluationReport,
    MaseScore,
    McbResult,
    avg_levels,
    avg_products,
    distribution_stats,
    mase,
    mcb_test,
    render_results_table,
)
from .forecasters import (
    ArimaError,
    ArimaModel,
    GbdtError,
    GbdtModel,
    GbdtParams,
    SesError,
    SesParams,
    arima_fit,
    arima_forecast,
    fit_gbdt,
    predict_gbdt,
    ses_fit,
    ses_forecast,
    tweedie_grad_hess,
    tweedie_loss,
)
from .hierarchy import (
    Hierarchy,
    HierarchyError,
    StructuralWeights,
    SummingMatrix,
    aggregate_bottom,
    build_hierarchy,
    coherence_check,
    structural_weights,
    summing_matrix,
)
from .reconcile import (
    MappingMatrix,
    ReconcileError,
    TdProportions,
    g_bottom_up,
    g_mint_structural,
    g_top_down,
    reconcile,
)
from .runner import RunnerError, report_artifact, run_pipeline
from .scopes import (
    ForecastSet,
    HyperGrid,
    Scope,
    ScopeError,
    TrainingMatrix,
    assemble_training_matrix,
    grid_search,
    produce_base_forecasts,
)
from .synth import SynthSpec, synth_bottom_series

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RunConfig",
    "load_config",
    "DataError",
    "EmbeddingMatrix",
    "PanelDataset",
    "SalesPanel",
    "SeriesFrame",
    "SplitSpec",
    "build_dataset",
    "build_embedding",
    "load_embedding_matrix",
    "load_sales_csv",
    "save_embedding_matrix",
    "split_holdout",
    "to_hierarchy_series",
    "DistributionStats",
    "EvaluationError",
    "EvaluationReport",
    "MaseScore",
    "McbResult",
    "avg_levels",
    "avg_products",
    "distribution_stats",
    "mase",
    "mcb_test",
    "render_results_table",
    "ArimaError",
    "ArimaModel",
    "GbdtError",
    "GbdtModel",
    "GbdtParams",
    "SesError",
    "SesParams",
    "arima_fit",
    "arima_forecast",
    "fit_gbdt",
    "predict_gbdt",
    "ses_fit",
    "ses_forecast",
    "tweedie_grad_hess",
    "tweedie_loss",
    "Hierarchy",
    "HierarchyError",
    "StructuralWeights",
    "SummingMatrix",
    "aggregate_bottom",
    "build_hierarchy",
    "coherence_check",
    "structural_weights",
    "summing_matrix",
    "MappingMatrix",
    "ReconcileError",
    "TdProportions",
    "g_bottom_up",
    "g_mint_structural",
    "g_top_down",
    "reconcile",
    "RunnerError",
    "report_artifact",
    "run_pipeline",
    "ForecastSet",
    "HyperGrid",
    "Scope",
    "ScopeError",
    "TrainingMatrix",
    "assemble_training_matrix",
    "grid_search",
    "produce_base_forecasts",
    "SynthSpec",
    "synth_bottom_series",
    "__version__",
]
