"""Repeat-until-success preparation of discretised normal distributions.

A Galton-board walk on a quantum register, driven by one reusable ancilla
and mid-circuit measurement, with qubit scaling to reach large variances
in few steps.
"""

from .exceptions import CapacityError, GaltonError, InfeasibleTargetError, ProjectionError
from .schedule import GridMap, Schedule, TargetSpec, plan, plan_schedule, to_grid_units
from .statevector import State
from .galton import (
    FourierMode,
    RunConfig,
    RunRecord,
    Variant,
    run_mcmr,
    run_mcmr_free,
    run_post_selected,
)
from .noise import ErrorKind, ErrorSpec, NoiseModel
from .estimator import GaussianStatePreparer

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ErrorKind",
    "ErrorSpec",
    "FourierMode",
    "GaltonError",
    "GaussianStatePreparer",
    "GridMap",
    "InfeasibleTargetError",
    "NoiseModel",
    "ProjectionError",
    "RunConfig",
    "RunRecord",
    "Schedule",
    "State",
    "TargetSpec",
    "Variant",
    "plan",
    "plan_schedule",
    "run_mcmr",
    "run_mcmr_free",
    "run_post_selected",
    "to_grid_units",
]
