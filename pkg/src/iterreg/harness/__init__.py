"""Experiment orchestration: configs, Monte Carlo replication and reports."""

from .config import DEFAULT_GRID, ExperimentConfig, grid_configs
from .montecarlo import (
    MonteCarloReport,
    RateStudy,
    ReplicateResult,
    SlopeFit,
    fit_slope,
    monte_carlo,
    rate_study,
    run_replicate,
)
from .reports import emit_reports, load_summary

__all__ = [
    "DEFAULT_GRID", "ExperimentConfig", "grid_configs", "MonteCarloReport", "RateStudy", "ReplicateResult",
    "SlopeFit", "fit_slope", "monte_carlo", "rate_study", "run_replicate", "emit_reports", "load_summary",
]
