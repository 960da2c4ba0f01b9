"""DG shallow-water solver with adjoint-based recovery of a time-dependent bottom."""
from .forward import (BottomTopography, BoundaryTrace, ControlSignal, SolverConfig, SWEState, Trajectory,
                      solve_forward)
from .mesh import Mesh1D, PiecewiseField, QuadratureRule, project

__all__ = [
    "BottomTopography", "BoundaryTrace", "ControlSignal", "Mesh1D", "PiecewiseField", "QuadratureRule",
    "SWEState", "SolverConfig", "Trajectory", "project", "solve_forward",
]
__version__ = "0.1.0"
