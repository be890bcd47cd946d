"""Nonlocal Lagrangian traffic flow.

Monotone fully-discrete schemes for the kernel-filtered spacing
variable, the three follow-the-leaders microscopic models, entropy
reference solvers, and the verification layer for the proved estimates.
"""

from .kernels import Kernel, WeightRow, eulerian_weights, lagrangian_weights
from .scheme import (Boundary, CflError, LagrangianGrid, PairState,
                     Trajectory, cfl_dt, filtered, run, step_pair, step_w)
from .velocity import VelocityModel, linear_velocity, velocity_by_name

__all__ = [
    "Boundary", "CflError", "Kernel", "LagrangianGrid", "PairState",
    "Trajectory", "VelocityModel", "WeightRow", "cfl_dt",
    "eulerian_weights", "filtered", "lagrangian_weights", "linear_velocity",
    "run", "step_pair", "step_w", "velocity_by_name",
]
