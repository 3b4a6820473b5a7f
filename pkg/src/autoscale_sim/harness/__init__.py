"""Experiment runner, training loops and command-line interface."""
from .config import AUTOSCALERS, ConfigInvalid, ExperimentConfig, config_from_dict, load_config
from .runner import (ComparisonTable, EmptyTimeline, MismatchedPlans, MissingModel, RunReport, compare,
                     load_report, run_experiment, summarize, write_outputs)

__all__ = [
    "AUTOSCALERS", "ComparisonTable", "ConfigInvalid", "EmptyTimeline", "ExperimentConfig",
    "MismatchedPlans", "MissingModel", "RunReport", "compare", "config_from_dict", "load_config",
    "load_report", "run_experiment", "summarize", "write_outputs",
]
