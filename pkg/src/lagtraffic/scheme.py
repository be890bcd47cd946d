"""Fully-discrete schemes on the Lagrangian grid.

Two coupled explicit updates with ratio ``lam = dt/dz``:

* the filtered variable:  w_i <- w_i + lam * sum_k I_k (W(w_{i+k+1}) - W(w_{i+k}))
* the spacing variable:   y_i <- y_i + lam * (W(w_{i+1}) - W(w_i)),  w = filtered(y)

where ``I`` is the Toeplitz weight row of the averaging kernel.  Under
the CFL condition ``lam * sup W' <= 1`` the w-update is monotone, hence
L1-contractive, TVD and maximum-principle preserving; applying the
averaging operator to the y-update reproduces the w-update exactly, so
the two trajectories stay consistent.

The grid is a finite window with constant states outside.  In "ghost"
mode convolutions read the constant right state beyond the window; in
"fold" mode (the matrix convention of the fully-discrete experiments)
the last in-range weight absorbs all remaining mass, which coincides
with ghost mode whenever the solution is constant near the right edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import fftconvolve

from .kernels import Kernel, WeightRow, lagrangian_weights
from .velocity import VelocityModel

BOUNDARY_MODES = ("ghost", "fold")

# above this work estimate a 1-D correlation goes through the FFT
_FFT_WORK_THRESHOLD = 4_000_000


class CflError(RuntimeError):
    """Time step too large for the current range of the solution."""


def tail_correlate(a: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Valid-mode correlation along the last axis.

    out[..., i] = sum_k weights[k] * a[..., i + k].
    """
    k = len(weights)
    n_out = a.shape[-1] - k + 1
    if n_out <= 0:
        raise ValueError("sequence shorter than the weight row")
    if a.shape[-1] * k >= _FFT_WORK_THRESHOLD:
        rev = np.broadcast_to(weights[::-1], a.shape[:-1] + (k,))
        return fftconvolve(a, rev, mode="valid", axes=-1)
    return sliding_window_view(a, k, axis=-1) @ weights


@dataclass(frozen=True)
class Boundary:
    """Constant states outside the window and the right-edge convention."""

    left: float
    right: float
    mode: str = "ghost"

    def __post_init__(self):
        if self.mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary mode must be one of {BOUNDARY_MODES}")
        if self.left < 1.0 or self.right < 1.0:
            raise ValueError("boundary spacings must be >= 1")


@dataclass(frozen=True)
class LagrangianGrid:
    """Finite window of cells of width dz with constant outside states."""

    dz: float
    n_cells: int
    y_left: float
    y_right: float
    z_origin: float = 0.0

    def __post_init__(self):
        if not self.dz > 0:
            raise ValueError("dz must be positive")
        if self.n_cells < 1:
            raise ValueError("need at least one cell")
        if self.y_left < 1.0 or self.y_right < 1.0:
            raise ValueError("boundary spacings must be >= 1")

    def z(self) -> np.ndarray:
        """Coordinates of the cells, z_i = z_origin + i*dz."""
        return self.z_origin + self.dz * np.arange(self.n_cells)

    def boundary(self, mode: str = "ghost") -> Boundary:
        return Boundary(self.y_left, self.y_right, mode)


def _freeze(arr) -> np.ndarray:
    a = np.array(arr, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PairState:
    """Spacings y and their kernel average w at one time level."""

    t: float
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", _freeze(self.y))
        object.__setattr__(self, "w", _freeze(self.w))
        if self.y.shape != self.w.shape:
            raise ValueError("y and w must have equal length")


def _ghost_value(values: np.ndarray, bc: Boundary):
    return bc.right if bc.mode == "ghost" else values[..., -1:]


def _pad_right(values: np.ndarray, ghost, n_pad: int) -> np.ndarray:
    shape = values.shape[:-1] + (n_pad,)
    if np.ndim(ghost) == 0:
        pad = np.full(shape, float(ghost))
    else:
        pad = np.broadcast_to(ghost, shape)
    return np.concatenate([values, pad], axis=-1)


def filtered(y: np.ndarray, row: WeightRow, bc: Boundary) -> np.ndarray:
    """Kernel average w_i = sum_k I_k y_{i+k} with the boundary convention.

    Ghost mode reads the constant right state beyond the window; fold
    mode lets the final in-range weight absorb all remaining mass, which
    is the same as padding with the last in-range value.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] == 0:
        raise ValueError("empty spacing sequence")
    ypad = _pad_right(y, _ghost_value(y, bc), row.reach - 1)
    return tail_correlate(ypad, row.weights)


def cfl_dt(model: VelocityModel, w_min: float, w_max: float, dz: float,
           safety: float = 0.9) -> float:
    """Largest admissible time step, dt = safety * dz / sup W'.

    A constant W (sup W' = 0) puts no restriction on dt; the step is
    then capped at dz so that a run still progresses.
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety must lie in (0, 1]")
    if not dz > 0:
        raise ValueError("dz must be positive")
    sup = model.sup_w_prime(w_min, w_max)
    if sup <= 0.0:
        return dz
    return safety * dz / sup


def _require_cfl(model: VelocityModel, lam: float, w_min: float, w_max: float):
    sup = model.sup_w_prime(w_min, w_max)
    if lam * sup > 1.0 + 1e-12 or lam < 0.0:
        raise CflError(
            f"lam * sup W' = {lam * sup:.6g} outside [0, 1] "
            f"on the range [{w_min:.6g}, {w_max:.6g}]")


def step_w(w: np.ndarray, row: WeightRow, model: VelocityModel, lam: float,
           bc: Boundary, check_cfl: bool = True) -> np.ndarray:
    """One monotone update of the filtered variable.

    Broadcasts over leading axes, so a batch of states can be stepped in
    one call.
    """
    w = np.asarray(w, dtype=float)
    ghost = _ghost_value(w, bc)
    if check_cfl:
        gmin = float(np.min(ghost)) if np.ndim(ghost) else float(ghost)
        _require_cfl(model, lam, min(float(w.min()), gmin),
                     max(float(w.max()), gmin if np.ndim(ghost) == 0
                         else float(np.max(ghost))))
    wpad = _pad_right(w, ghost, row.reach)
    dflux = np.diff(model.w(wpad), axis=-1)
    return w + lam * tail_correlate(dflux, row.weights)


def step_pair(state: PairState, grid: LagrangianGrid, row: WeightRow,
              model: VelocityModel, dt: float, bc: Boundary) -> PairState:
    """One explicit upwind update of the spacings, then refilter.

    y_i <- y_i + lam (W(w_{i+1}) - W(w_i)) with w the current average;
    the new w is the average of the new y.
    """
    lam = dt / grid.dz
    w = state.w
    ghost = _ghost_value(w, bc)
    g = float(ghost if np.ndim(ghost) == 0 else ghost[-1])
    _require_cfl(model, lam, min(float(w.min()), g), max(float(w.max()), g))
    wflux = model.w(np.append(w, g))
    y_new = state.y + lam * np.diff(wflux)
    w_new = filtered(y_new, row, bc)
    return PairState(t=state.t + dt, y=y_new, w=w_new)


@dataclass
class Trajectory:
    """Recorded states of one run plus the per-step bookkeeping.

    ``anchors`` accumulates sum_m dt_m * V(1/y_1^m) (the displacement of
    the first car) alongside each recorded state; ``dts`` holds every
    step taken and ``recorded_steps`` maps states to step numbers.
    """

    grid: LagrangianGrid
    row: WeightRow
    boundary: Boundary
    states: list = field(default_factory=list)
    anchors: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    recorded_steps: list = field(default_factory=list)

    @property
    def final(self) -> PairState:
        return self.states[-1]


def run(y0, grid: LagrangianGrid, kernel: Kernel, alpha: float,
        model: VelocityModel, t_end: float, safety: float = 0.9,
        record_every: int = 1, boundary_mode: str = "ghost",
        tail_mass_tol: float = 1e-12) -> Trajectory:
    """Advance the pair (y, w) from y0 to t_end with CFL-limited steps.

    The time step is recomputed each step from the current w-range and
    the final step is shortened so the last state lands on t_end
    exactly.  The weight row is built once; its reach is capped at the
    window length, beyond which the constant boundary state makes the
    folded tail exact.
    """
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim != 1 or len(y0) != grid.n_cells:
        raise ValueError("y0 must be a 1-D array of grid.n_cells spacings")
    if np.any(y0 < 1.0):
        raise ValueError("initial spacings must satisfy y0 >= 1")
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")

    row = lagrangian_weights(kernel, alpha, grid.dz, tail_mass_tol,
                             k_max=grid.n_cells, on_cap="absorb")
    bc = grid.boundary(boundary_mode)
    state = PairState(t=0.0, y=y0, w=filtered(y0, row, bc))
    traj = Trajectory(grid=grid, row=row, boundary=bc)
    traj.states.append(state)
    traj.anchors.append(0.0)
    traj.recorded_steps.append(0)

    anchor = 0.0
    t = 0.0
    n_step = 0
    while t < t_end:
        g = bc.right if bc.mode == "ghost" else float(state.w[-1])
        w_lo = min(float(state.w.min()), g)
        w_hi = max(float(state.w.max()), g)
        dt = cfl_dt(model, w_lo, w_hi, grid.dz, safety)
        last = dt >= t_end - t
        if last:
            dt = t_end - t
        state = step_pair(state, grid, row, model, dt, bc)
        n_step += 1
        t = t_end if last else t + dt
        if last:
            state = PairState(t=t_end, y=state.y, w=state.w)
        anchor += dt * float(model.v(1.0 / state.y[0]))
        traj.dts.append(dt)
        if last or n_step % record_every == 0:
            traj.states.append(state)
            traj.anchors.append(anchor)
            traj.recorded_steps.append(n_step)
    return traj
