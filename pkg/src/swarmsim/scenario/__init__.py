"""Scenario files, the simulation loop, logs and metrics."""

from .config import (
    CONTROL_PERIOD,
    PHYSICS_DT,
    SUBSTEPS,
    AgentSpec,
    InitSpec,
    ScenarioConfig,
    ScenarioError,
    builtin,
    builtin_names,
    builtin_text,
    dump_scenario,
    load_scenario,
    resolve,
)
from .engine import TrajectoryLog, run, sample_initial_conditions
