"""Simulation model, scenario runner and Monte Carlo metrics."""
from .dgp import (
    EFFECT_KINDS,
    SHIFTS,
    DgpSpec,
    Latent,
    OracleControlMean,
    ShiftSpec,
    monte_carlo_ate,
    oracle_prognostic_score,
    outcome_means,
    sample_historical,
    sample_trial,
    step_offset,
    true_ate,
)
from .io import (
    METRICS_COLUMNS,
    RAW_COLUMNS,
    SELECTION_COLUMNS,
    metrics_rows,
    read_metrics_csv,
    read_raw_csv,
    read_selection_csv,
    write_metrics_csv,
    write_raw_csv,
    write_selection_csv,
)
from .metrics import METRIC_FIELDS, EstimatorMetrics, MetricsTable, aggregate, summarize
from .presets import PRESETS, preset
from .runner import (
    ESTIMATORS,
    TABLE5_ROSTER,
    RawResults,
    ScenarioConfig,
    default_workers,
    run_rep,
    run_scenario,
)

__all__ = [
    "EFFECT_KINDS", "ESTIMATORS", "METRICS_COLUMNS", "METRIC_FIELDS", "PRESETS",
    "RAW_COLUMNS", "SELECTION_COLUMNS", "SHIFTS", "TABLE5_ROSTER",
    "DgpSpec", "EstimatorMetrics", "Latent", "MetricsTable", "OracleControlMean",
    "RawResults", "ScenarioConfig", "ShiftSpec",
    "aggregate", "default_workers", "metrics_rows", "monte_carlo_ate",
    "oracle_prognostic_score", "outcome_means", "preset", "read_metrics_csv",
    "read_raw_csv", "read_selection_csv", "run_rep", "run_scenario", "sample_historical",
    "sample_trial", "step_offset", "summarize", "true_ate", "write_metrics_csv",
    "write_raw_csv", "write_selection_csv",
]
