"""Entropy-solution reference solvers.

Engquist-Osher for the Eulerian density law rho_t + (rho V(rho))_x = 0
and plain first-order upwind for the Lagrangian law w_t = W(w)_z (the
upwind direction is fixed since W' >= 0).  Both are monotone and serve
as the local references for the zero-filter experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .velocity import VelocityModel

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section search for the maximizer of a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class EulerianGrid:
    """Uniform cells [x_lo + i dx, x_lo + (i+1) dx) with constant-extension
    boundary states."""

    x_lo: float
    dx: float
    n_cells: int
    rho_left: float
    rho_right: float

    def __post_init__(self):
        if not self.dx > 0 or self.n_cells < 1:
            raise ValueError("need dx > 0 and at least one cell")
        for r in (self.rho_left, self.rho_right):
            if not 0.0 <= r <= 1.0:
                raise ValueError("boundary densities must lie in [0, 1]")

    @property
    def edges(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.x_lo + self.dx * (0.5 + np.arange(self.n_cells))


class EngquistOsher:
    """Monotone split flux F(a, b) = f(min(a, r*)) + f(max(b, r*)) - f(r*).

    The flux f(rho) = rho V(rho) must be unimodal on [0, 1]; its interior
    maximizer r* is located once by golden-section search.  Non-unimodal
    fluxes are rejected at construction.
    """

    def __init__(self, model: VelocityModel):
        self.model = model
        scan = np.linspace(0.0, 1.0, 1001)
        fscan = np.asarray(model.flux(scan), dtype=float)
        signs = np.sign(np.diff(fscan))
        changes = np.count_nonzero(np.diff(signs[signs != 0.0]))
        if changes > 1:
            raise ValueError(f"flux of {model.name!r} is not unimodal")
        self.rho_star = _golden_max(lambda r: float(model.flux(r)), 0.0, 1.0)
        self.f_star = float(model.flux(self.rho_star))
        # max |f'| over [0, 1] for CFL purposes, from the same scan
        self.max_wave_speed = float(np.max(np.abs(np.diff(fscan))) / 0.001)

    def flux(self, a, b):
        """Numerical flux; vectorises over a, b."""
        f = self.model.flux
        return f(np.minimum(a, self.rho_star)) + f(np.maximum(b, self.rho_star)) - self.f_star

    def step(self, rho: np.ndarray, lam: float, rho_left: float,
             rho_right: float) -> np.ndarray:
        """Conservative update rho_i <- rho_i - lam (F_{i+1/2} - F_{i-1/2})."""
        if lam * self.max_wave_speed > 1.0 + 1e-12 or lam < 0.0:
            raise ValueError(f"CFL violation: lam*max|f'| = "
                             f"{lam * self.max_wave_speed:.6g}")
        rho_pad = np.concatenate([[rho_left], rho, [rho_right]])
        f_iface = self.flux(rho_pad[:-1], rho_pad[1:])
        return rho - lam * np.diff(f_iface)


def solve_lwr(rho0_of_x, grid: EulerianGrid, model: VelocityModel,
              t_end: float, safety: float = 0.9) -> np.ndarray:
    """March the Engquist-Osher scheme to t_end from rho0 sampled at
    cell centers; the last step is shortened to land on t_end."""
    eo = EngquistOsher(model)
    rho = np.asarray(rho0_of_x(grid.centers), dtype=float)
    dt_max = safety * grid.dx / eo.max_wave_speed
    t = 0.0
    while t < t_end:
        dt = min(dt_max, t_end - t)
        rho = eo.step(rho, dt / grid.dx, grid.rho_left, grid.rho_right)
        t = t_end if dt >= t_end - t else t + dt
    return rho


def lagrangian_upwind_step(w: np.ndarray, model: VelocityModel, lam: float,
                           w_right: float) -> np.ndarray:
    """First-order upwind for w_t = W(w)_z: w_i <- w_i + lam (W(w_{i+1}) - W(w_i))."""
    w = np.asarray(w, dtype=float)
    hi = max(float(w.max()), w_right)
    lo = min(float(w.min()), w_right)
    if lam * model.sup_w_prime(lo, hi) > 1.0 + 1e-12 or lam < 0.0:
        raise ValueError("CFL violation in Lagrangian upwind step")
    wflux = model.w(np.append(w, w_right))
    return w + lam * np.diff(wflux)
