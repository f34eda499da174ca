"""Tick-stepped swarm mission simulator."""

from .invariants import InvariantReport, check_log
from .random_scenario import random_scenario, random_scenario_dict
from .scenario import ScenarioScript, bundled_scenarios, load_scenario, scenario_from_dict
from .simulator import DemandTrace, SimResult, Simulation, run_scenario

__all__ = [
    "DemandTrace",
    "InvariantReport",
    "ScenarioScript",
    "SimResult",
    "Simulation",
    "bundled_scenarios",
    "check_log",
    "load_scenario",
    "random_scenario",
    "random_scenario_dict",
    "run_scenario",
    "scenario_from_dict",
]
