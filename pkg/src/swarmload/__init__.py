"""Workload estimation from physiological and speech signals, plus a swarm
mission simulator that produces ground-truth demand traces."""

from .core import ComponentKind, MetricKind, WorkloadState
from .engine import OverallEstimate, ShiftConfig, Thresholds, aggregate_overall, classify, run_pipeline
from .errors import SwarmloadError

__all__ = [
    "ComponentKind",
    "MetricKind",
    "OverallEstimate",
    "ShiftConfig",
    "SwarmloadError",
    "Thresholds",
    "WorkloadState",
    "aggregate_overall",
    "classify",
    "run_pipeline",
]
__version__ = "0.1.0"
