"""Simulation and analysis of two one-dimensional CSF flow models."""

from .closed_form import RiccatiParams, blowup_time, riccati_pressure
from .config import ScenarioConfig, load_scenario
from .errors import (
    BlowUpCrossed,
    ConfigError,
    CSFError,
    ExprSyntaxError,
    InvalidParams,
    NoContraction,
    SingularState,
)
from .model import FIELDS, Grid, ModelOptions, PhysConstants, State
from .numerics import Problem, StepperConfig, Trajectory, simulate

__version__ = "0.1.0"

__all__ = [
    "BlowUpCrossed", "ConfigError", "CSFError", "ExprSyntaxError", "FIELDS", "Grid",
    "InvalidParams", "ModelOptions", "NoContraction", "PhysConstants", "Problem",
    "RiccatiParams", "ScenarioConfig", "SingularState", "State", "StepperConfig",
    "Trajectory", "blowup_time", "load_scenario", "riccati_pressure", "simulate",
]
