"""Configuration, experiment drivers and result files for the command line."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import (
    record_shots,
    run_backlog_suite,
    run_bounds,
    run_experiment,
    run_gap_histogram,
    run_memory_experiment,
    run_spectrum,
    run_threshold_curve,
    run_tradeoff_scan,
)
from .results import ResultTable, read_table

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultTable",
    "load_config",
    "parse_config",
    "read_table",
    "record_shots",
    "run_backlog_suite",
    "run_bounds",
    "run_experiment",
    "run_gap_histogram",
    "run_memory_experiment",
    "run_spectrum",
    "run_threshold_curve",
    "run_tradeoff_scan",
]
