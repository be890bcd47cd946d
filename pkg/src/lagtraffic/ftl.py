"""Microscopic follow-the-leaders models integrated by explicit Euler.

Three speed laws for car i looking downstream:

* local:                V(u_i),  u_i = ell / (x_{i+1} - x_i)
* nonlocal Eulerian:    V of the weighted arithmetic mean of densities,
                        weights from kernel mass between car positions
* nonlocal Lagrangian:  V of the weighted harmonic mean of densities,
                        weights from kernel mass between car labels

The last car N is closed by a virtual leader at infinity carrying the
frozen downstream density u_last, so all three laws give the leader the
speed V(u_last).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .coordinates import StepFunction
from .kernels import Kernel, WeightRow, eulerian_weight_matrix, lagrangian_weights
from .scheme import tail_correlate
from .velocity import VelocityModel

MODEL_KINDS = ("local", "eulerian", "lagrangian")


class OrderingError(RuntimeError):
    """A step would push two cars closer than one car length."""


@dataclass(frozen=True)
class DensityProfile:
    """Piecewise-constant density on the line, right-continuous at breaks.

    ``values[k]`` rules on [breaks[k-1], breaks[k]); all values must lie
    in (0, 1].
    """

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if len(values) != len(breaks) + 1:
            raise ValueError("need len(breaks) + 1 piece values")
        if len(breaks) and np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(values <= 0.0) or np.any(values > 1.0):
            raise ValueError("density values must lie in (0, 1]")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        idx = np.searchsorted(self.breaks, x, side="right")
        return self.values[idx]


def box_profile(inside: float = 1.0, outside: float = 0.05,
                half_width: float = 0.75) -> DensityProfile:
    """Density `inside` on (-half_width, half_width), `outside` elsewhere."""
    return DensityProfile(breaks=[-half_width, half_width],
                          values=[outside, inside, outside])


@dataclass(frozen=True)
class FtlState:
    """Car positions plus the frozen up/downstream constants."""

    t: float
    ell: float
    x: np.ndarray
    u_left: float
    u_last: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        if len(x) < 1:
            raise ValueError("need at least one car")
        if np.any(np.diff(x) < self.ell * (1.0 - 1e-12)):
            raise ValueError("car gaps must be at least one car length")
        for u in (self.u_left, self.u_last):
            if not 0.0 < u <= 1.0:
                raise ValueError("boundary densities must lie in (0, 1]")

    @property
    def n_cars(self) -> int:
        return len(self.x)

    def spacings(self) -> np.ndarray:
        """Gaps x_{i+1} - x_i; the leader gets the virtual gap ell/u_last."""
        return np.append(np.diff(self.x), self.ell / self.u_last)

    def densities(self) -> np.ndarray:
        """Discrete densities u_i = ell / gap_i (so u_N = u_last)."""
        return self.ell / self.spacings()


def discretize_density(rho0: DensityProfile, ell: float, a: float,
                       b: float) -> FtlState:
    """Place cars so each consecutive pair encloses mass ell of rho0.

    x_1 = a and x_{k+1} inverts the cumulative mass at k*ell (the mass
    function is piecewise linear, so the inversion is exact).  N is the
    smallest index with x_{N+1} > b; only x_1..x_N are kept, the frozen
    constants are u_last = rho0(x_{N+1}) and u_left = rho0(a - 1).
    """
    if not ell > 0:
        raise ValueError("car length ell must be positive")
    if not b > a:
        raise ValueError("need b > a")

    v_far = float(rho0.values[-1])
    x_stop = max(b, rho0.breaks[-1] if len(rho0.breaks) else b)
    x_stop += 3.0 * ell / v_far + ell
    knots = np.concatenate([[a],
                            rho0.breaks[(rho0.breaks > a) & (rho0.breaks < x_stop)],
                            [x_stop]])
    piece_vals = np.asarray(rho0(knots[:-1]), dtype=float)
    mass = np.concatenate([[0.0], np.cumsum(piece_vals * np.diff(knots))])

    n_targets = int(np.floor(mass[-1] / ell)) + 1
    targets = ell * np.arange(n_targets)
    pos = np.interp(targets, mass, knots)      # pos[k] = x_{k+1}

    beyond = np.nonzero(pos > b)[0]
    if len(beyond) == 0:
        raise ValueError("mass window too short to cross b")  # pragma: no cover
    n = int(beyond[0])
    if n < 1:
        raise ValueError("no cars fit between a and b")
    return FtlState(t=0.0, ell=ell, x=pos[:n],
                    u_left=float(rho0(a - 1.0)),
                    u_last=float(rho0(pos[n])))


def arithmetic_mean_density(u, weights) -> float:
    """Weighted arithmetic mean of densities."""
    return float(np.dot(weights, u))


def harmonic_mean_density(u, weights) -> float:
    """Weighted harmonic mean of densities (reciprocal of mean spacing)."""
    return 1.0 / float(np.dot(weights, 1.0 / np.asarray(u, dtype=float)))


def speeds_local(state: FtlState, model: VelocityModel) -> np.ndarray:
    """V(u_i) for every car; the leader moves at V(u_last)."""
    return np.asarray(model.v(state.densities()), dtype=float)


def speeds_nonlocal_eulerian(state: FtlState, model: VelocityModel,
                             kernel: Kernel, alpha: float) -> np.ndarray:
    """V of the position-weighted arithmetic mean of downstream densities.

    The weight matrix depends on the current positions and is rebuilt
    every call.
    """
    edges = np.append(state.x, np.inf)
    mat = eulerian_weight_matrix(kernel, alpha, edges)
    return np.asarray(model.v(mat @ state.densities()), dtype=float)


def speeds_nonlocal_lagrangian(state: FtlState, model: VelocityModel,
                               row: WeightRow) -> np.ndarray:
    """V of the label-weighted harmonic mean of downstream densities.

    The Toeplitz row is position-independent, so it is built once per
    simulation from (kernel, alpha, dz=ell).
    """
    s = state.spacings() / state.ell
    spad = np.concatenate([s, np.full(row.reach - 1, 1.0 / state.u_last)])
    mean_spacing = tail_correlate(spad, row.weights)
    return np.asarray(model.v(1.0 / mean_spacing), dtype=float)


def euler_step(state: FtlState, speeds: np.ndarray, dt: float) -> FtlState:
    """x_i <- x_i + dt * speed_i, re-checking the gap invariant."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x_new = state.x + dt * np.asarray(speeds, dtype=float)
    gaps = np.diff(x_new)
    bad = np.nonzero(gaps < state.ell * (1.0 - 1e-12))[0]
    if len(bad):
        raise OrderingError(
            f"cars {bad[0]} and {bad[0] + 1} closer than one car length "
            f"after step at t = {state.t:.6g}")
    return FtlState(t=state.t + dt, ell=state.ell, x=x_new,
                    u_left=state.u_left, u_last=state.u_last)


def simulate(state: FtlState, kind: str, model: VelocityModel,
             kernel: Kernel | None = None, alpha: float | None = None,
             t_end: float = 0.0, dt: float | None = None,
             tail_mass_tol: float = 1e-12) -> FtlState:
    """March one model to t_end with explicit Euler (dt defaults to ell)."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"model kind must be one of {MODEL_KINDS}")
    if kind != "local" and (kernel is None or alpha is None):
        raise ValueError(f"{kind!r} model needs a kernel and a filter size")
    if dt is None:
        dt = state.ell

    if kind == "local":
        speed_fn = lambda s: speeds_local(s, model)
    elif kind == "eulerian":
        speed_fn = lambda s: speeds_nonlocal_eulerian(s, model, kernel, alpha)
    else:
        row = lagrangian_weights(kernel, alpha, state.ell, tail_mass_tol,
                                 k_max=state.n_cars, on_cap="absorb")
        speed_fn = lambda s: speeds_nonlocal_lagrangian(s, model, row)

    t = state.t
    while t < t_end:
        step = min(dt, t_end - t)
        state = euler_step(state, speed_fn(state), step)
        t = t_end if step >= t_end - t else t + step
    if state.t != t:
        state = replace(state, t=t)
    return state


def reconstruct_density(state: FtlState) -> StepFunction:
    """Piecewise-constant density: u_left up to the first car, u_i on
    (x_i, x_{i+1}], u_last beyond the last car."""
    nodes = np.concatenate([[-np.inf], state.x])
    values = np.concatenate([[state.u_left], state.densities()])
    return StepFunction(nodes, values)


def mass_centroid(state: FtlState) -> float:
    """Centroid of the car platoon (each car carries mass ell)."""
    return float(state.x.mean())
