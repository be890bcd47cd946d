"""Lagrangian-to-Eulerian reconstruction and step-function utilities.

The physical position of cell i at a recorded level is

    xi_1 = x_1(0) + sum_m dt_m V(1/y_1^m),   xi_{i+1} = xi_i + y_i dz,

so a trace of densities 1/w (or 1/y) over the xi partition can be
compared in L1 against an Eulerian reference profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scheme import Trajectory
from .velocity import VelocityModel


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant, left-closed: value v_k on [x_k, x_{k+1}).

    Queries left of x_0 return v_0, queries right of the last node
    return the last value.
    """

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if len(x) == 0:
            raise ValueError("empty step function")
        if len(x) != len(v):
            raise ValueError("need one value per node")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    def __call__(self, query):
        idx = np.searchsorted(self.x, query, side="right") - 1
        return self.v[np.clip(idx, 0, len(self.v) - 1)]


def sample_step_function(grid_x, values, query_x):
    """Evaluate the left-closed step function (grid_x, values) at query_x."""
    return StepFunction(grid_x, values)(query_x)


@dataclass(frozen=True)
class EulerianTrace:
    """Cell values over their physical partition at one time.

    ``xi`` holds the n+1 cell edges (xi_{i+1} - xi_i = y_i dz), and
    ``values`` the n per-cell values.
    """

    t: float
    xi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if len(xi) != len(v) + 1:
            raise ValueError("need n+1 edges for n values")
        if np.any(np.diff(xi) <= 0):
            raise ValueError("edges must be strictly increasing")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", v)

    @property
    def points(self):
        """(xi_i, value_i) pairs at the left edges."""
        return self.xi[:-1], self.values


def eulerian_edges(y: np.ndarray, anchor_shift: float, x1_0: float,
                   dz: float) -> np.ndarray:
    """Edges xi_1..xi_{n+1} from spacings and the first-car displacement."""
    y = np.asarray(y, dtype=float)
    xi = np.empty(len(y) + 1)
    xi[0] = x1_0 + anchor_shift
    np.cumsum(y * dz, out=xi[1:])
    xi[1:] += xi[0]
    return xi


def anchor_shifts(y_levels, dts, model: VelocityModel) -> np.ndarray:
    """Post-hoc first-car displacements from a full per-step y history.

    ``y_levels`` has one row per level 0..n (level m the result of step
    m); entry m of the result is sum_{k<=m} dt_k V(1/y_1^k) with the
    paper-style convention of evaluating y_1 after each step.
    """
    y_levels = np.asarray(y_levels, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if len(y_levels) != len(dts) + 1:
        raise ValueError("need the y history at every step: "
                         f"{len(y_levels)} levels vs {len(dts)} steps")
    speeds = model.v(1.0 / y_levels[1:, 0])
    return np.concatenate([[0.0], np.cumsum(dts * speeds)])


def eulerian_coordinates(traj: Trajectory, model: VelocityModel,
                         x1_0: float) -> list[np.ndarray]:
    """Edge grids xi for every recorded state of a trajectory.

    Uses the anchor displacements accumulated online during the run;
    they equal the post-hoc sum over the full step history.
    """
    dz = traj.grid.dz
    return [eulerian_edges(s.y, a, x1_0, dz)
            for s, a in zip(traj.states, traj.anchors)]


def density_trace(state_y, state_w, anchor_shift: float, x1_0: float,
                  dz: float, t: float, use: str = "w") -> EulerianTrace:
    """Trace of densities 1/w (or 1/y) over the physical partition."""
    if use not in ("w", "y"):
        raise ValueError("use must be 'w' or 'y'")
    xi = eulerian_edges(state_y, anchor_shift, x1_0, dz)
    vals = 1.0 / np.asarray(state_w if use == "w" else state_y, dtype=float)
    return EulerianTrace(t=t, xi=xi, values=vals)


def l1_between_traces(trace: EulerianTrace, reference: StepFunction) -> float:
    """L1 distance on the trace partition:

    sum_i |value_i - reference(xi_i)| * (xi_{i+1} - xi_i).
    """
    widths = np.diff(trace.xi)
    return float(np.sum(np.abs(trace.values - reference(trace.xi[:-1])) * widths))
