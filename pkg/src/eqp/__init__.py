"""Parallel star-subgradient projection solver for quasiconvex equilibrium problems."""

from .geometry import (
    Ball,
    Box,
    Halfspace,
    Intersection,
    averaged_projection,
    feasibility_residual,
    project,
    project_ball,
    project_box,
    project_halfspace,
    project_intersection_dykstra,
)
from .problem import (
    EquilibriumBifunction,
    FractionalBifunction,
    monotonicity_diagnostic,
    monotonicity_matrix,
)
from .solver import SolveOutcome, SolverConfig, Status, StepSchedule, solve, step

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "Box",
    "EquilibriumBifunction",
    "FractionalBifunction",
    "Halfspace",
    "Intersection",
    "SolveOutcome",
    "SolverConfig",
    "Status",
    "StepSchedule",
    "averaged_projection",
    "feasibility_residual",
    "monotonicity_diagnostic",
    "monotonicity_matrix",
    "project",
    "project_ball",
    "project_box",
    "project_halfspace",
    "project_intersection_dykstra",
    "solve",
    "step",
]
