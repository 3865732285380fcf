"""Experiment runner, presets, result files and CLI."""

from .experiment import (METRICS, SCHEMES, AggregateResult, ExperimentSpec, TrialRecord,
                         aggregate, run_experiment, run_trial)
from .io import emit, load_spec
from .presets import PRESETS, preset, preset_pbd, preset_roc, preset_sumrate_vs_power

__all__ = [
    "METRICS", "SCHEMES", "PRESETS", "AggregateResult", "ExperimentSpec", "TrialRecord",
    "aggregate", "emit", "load_spec", "preset", "preset_pbd", "preset_roc",
    "preset_sumrate_vs_power", "run_experiment", "run_trial",
]
