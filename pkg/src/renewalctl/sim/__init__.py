"""Simulation engine, scenario catalog and run metrics."""

from .core import KINDS, FrameTrace, RunSummary, Scenario, trace_columns
from .engine import run_scenario
from .metrics import moving_average, time_average_ratio
from .scenarios import builtin_scenarios, default_horizon, get_scenario, scenario_names

__all__ = [
    "KINDS", "FrameTrace", "RunSummary", "Scenario", "builtin_scenarios", "default_horizon",
    "get_scenario", "moving_average", "run_scenario", "scenario_names", "time_average_ratio",
    "trace_columns",
]
