"""Beeping-model MIS protocols, adversarial scenarios and trace verification."""

from .estimator import BeepingMIS
from .harness import ExperimentConfig, Report, fit_scaling, replay, run_batch, run_trial, sweep
from .kernel import Scenario, Trace, run
from .verify import check_mis, stabilization_round

__version__ = "0.1.0"

__all__ = [
    "BeepingMIS",
    "ExperimentConfig",
    "Report",
    "Scenario",
    "Trace",
    "check_mis",
    "fit_scaling",
    "replay",
    "run",
    "run_batch",
    "run_trial",
    "stabilization_round",
    "sweep",
]
