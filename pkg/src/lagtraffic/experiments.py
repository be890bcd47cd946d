"""Drivers for the three experiments and the raw-run command.

Each driver takes a validated ExperimentConfig, writes CSVs (and a
gnuplot script) into the output directory, and returns a summary object
that the tests assert against directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ftl, output
from .config import ConfigError, ExperimentConfig, parse_profile
from .coordinates import StepFunction, density_trace, l1_between_traces
from .diagnostics import bv_seminorm, exp_identity_residual, filtered_gap, rate_fit
from .ftl import DensityProfile, discretize_density, mass_centroid
from .kernels import Kernel
from .reference import EngquistOsher, EulerianGrid, solve_lwr
from .scheme import LagrangianGrid, Trajectory, run
from .velocity import VelocityModel, velocity_by_name

RECORD_FINAL_ONLY = 10**9


@dataclass(frozen=True)
class PairSetup:
    """Lagrangian initial data derived from an Eulerian density profile."""

    profile: DensityProfile
    grid: LagrangianGrid
    y0: np.ndarray
    x1_0: float
    a: float
    b: float

    @property
    def bv_y0(self) -> float:
        """Full-line variation including the constant states outside."""
        return bv_seminorm(np.concatenate([[self.grid.y_left], self.y0,
                                           [self.grid.y_right]]))


def pair_setup(profile: DensityProfile, ell: float) -> PairSetup:
    """Cars from the density profile, read off as spacings on the grid."""
    if len(profile.breaks) == 0:
        raise ConfigError("profile: constant data has no window to simulate")
    a = float(profile.breaks[0])
    b = float(profile.breaks[-1])
    state0 = discretize_density(profile, ell, a, b)
    y0 = state0.spacings() / ell
    grid = LagrangianGrid(dz=ell, n_cells=state0.n_cars,
                          y_left=1.0 / state0.u_left,
                          y_right=1.0 / state0.u_last,
                          z_origin=ell)
    return PairSetup(profile=profile, grid=grid, y0=y0, x1_0=float(state0.x[0]),
                     a=a, b=b)


def lwr_reference(profile: DensityProfile, model: VelocityModel, t_end: float,
                  dx: float, pad: float = 0.2,
                  safety: float = 0.9) -> StepFunction:
    """Engquist-Osher solution at t_end as a step function on a fine grid.

    The domain extends past the profile's support by the maximal wave
    distance plus a pad, so the constant-extension boundaries stay exact.
    """
    ws = EngquistOsher(model).max_wave_speed
    x_lo = float(profile.breaks[0]) - ws * t_end - pad
    x_hi = float(profile.breaks[-1]) + ws * t_end + pad
    n = int(math.ceil((x_hi - x_lo) / dx))
    grid = EulerianGrid(x_lo=x_lo, dx=dx, n_cells=n,
                        rho_left=float(profile(x_lo)),
                        rho_right=float(profile(x_hi)))
    rho = solve_lwr(profile, grid, model, t_end, safety)
    return StepFunction(grid.edges[:-1], rho)


# --- zero-filter sweep ----------------------------------------------------

@dataclass(frozen=True)
class ZeroFilterRow:
    alpha: float
    l1_error: float
    rate_bound: float
    gap: float
    residual: float


@dataclass(frozen=True)
class ZeroFilterResult:
    rows: list
    slope: float | None
    bv_y0: float
    files: list

    @property
    def errors(self):
        return [r.l1_error for r in self.rows]


def run_zero_filter(cfg: ExperimentConfig, ref_dx: float | None = None) -> ZeroFilterResult:
    """Pair-scheme sweep over filter sizes against a fine-grid reference.

    Per alpha: run the coupled scheme to t_end, map to physical
    coordinates, record the L1 distance of 1/w to the reference density,
    the rate-theorem bound, and the y-to-w gap.
    """
    outdir = Path(cfg.outdir)
    profile = parse_profile(cfg.profile)
    model = velocity_by_name(cfg.velocity)
    setup = pair_setup(profile, cfg.ell)
    kernel = Kernel(cfg.kernel)

    ref = lwr_reference(profile, model, cfg.t_end,
                        dx=ref_dx if ref_dx is not None else cfg.ell / 8.0,
                        safety=cfg.safety)
    files = [output.write_csv(outdir / "reference_rho.csv", ("t", "x", "rho"),
                              ((cfg.t_end, x, r) for x, r in zip(ref.x, ref.v)))]

    bv0 = setup.bv_y0
    sup_wp = model.sup_w_prime(1.0, max(float(setup.y0.max()),
                                        setup.grid.y_right, setup.grid.y_left))
    rows = []
    clauses = [f"'reference_rho.csv' skip 1 using 2:3 with lines "
               f"title 'reference'"]
    for alpha in sorted(cfg.alphas, reverse=True):
        traj = run(setup.y0, setup.grid, kernel, alpha, model, cfg.t_end,
                   safety=cfg.safety,
                   record_every=cfg.record_every or RECORD_FINAL_ONLY,
                   boundary_mode=cfg.boundary, tail_mass_tol=cfg.tail_tol)
        state = traj.final
        trace_w = density_trace(state.y, state.w, traj.anchors[-1],
                                setup.x1_0, cfg.ell, state.t, use="w")
        trace_y = density_trace(state.y, state.w, traj.anchors[-1],
                                setup.x1_0, cfg.ell, state.t, use="y")
        err = l1_between_traces(trace_w, ref)
        bound = 2.0 * math.sqrt(2.0 * cfg.t_end * sup_wp * bv0 * alpha)
        gap = filtered_gap(state.y, state.w, cfg.ell)
        residual = (exp_identity_residual(state.w, state.y, alpha, cfg.ell)
                    if cfg.kernel == "exp" else float("nan"))
        rows.append(ZeroFilterRow(alpha=alpha, l1_error=err, rate_bound=bound,
                                  gap=gap, residual=residual))
        tag = f"{alpha:.6g}".replace(".", "p").replace("-", "m")
        name = f"trace_alpha_{tag}.csv"
        files.append(output.write_trace_csv(outdir / name, trace_w.xi[:-1],
                                            trace_w.values, trace_y.values))
        clauses.append(f"'{name}' skip 1 using 1:2 with lines "
                       f"title '1/w, alpha={alpha:.6g}'")

    files.append(output.write_csv(
        outdir / "zero_filter_rates.csv",
        ("alpha", "l1_error", "rate_bound", "filtered_gap", "exp_residual"),
        ((r.alpha, r.l1_error, r.rate_bound, r.gap, r.residual) for r in rows)))
    files.append(output.write_gnuplot(outdir / "zero_filter.gp",
                                      "zero-filter limit", "x", "density",
                                      clauses))
    slope = rate_fit([(r.alpha, r.l1_error) for r in rows]).slope \
        if len(rows) >= 2 else None
    return ZeroFilterResult(rows=rows, slope=slope, bv_y0=bv0, files=files)


# --- FtL model comparison -------------------------------------------------

@dataclass(frozen=True)
class FtlComparison:
    states: dict
    centroids: dict
    files: list


def run_compare_ftl(cfg: ExperimentConfig) -> FtlComparison:
    """Run the three microscopic models from the same discretised data."""
    outdir = Path(cfg.outdir)
    profile = parse_profile(cfg.profile)
    if len(profile.breaks) == 0:
        raise ConfigError("profile: constant data has no window to simulate")
    model = velocity_by_name(cfg.velocity)
    kernel = Kernel(cfg.kernel)
    a, b = float(profile.breaks[0]), float(profile.breaks[-1])
    state0 = discretize_density(profile, cfg.ell, a, b)

    states, centroids, files, clauses = {}, {}, [], []
    for kind in ftl.MODEL_KINDS:
        final = ftl.simulate(state0, kind, model, kernel=kernel,
                             alpha=cfg.alpha, t_end=cfg.t_end,
                             tail_mass_tol=cfg.tail_tol)
        states[kind] = final
        centroids[kind] = mass_centroid(final)
        name = f"density_{kind}.csv"
        files.append(output.write_density_csv(outdir / name, final.x,
                                              final.densities()))
        clauses.append(f"'{name}' skip 1 using 1:2 with steps title '{kind}'")

    files.append(output.write_cars_csv(outdir / "compare_ftl_cars.csv",
                                       sorted(states.items())))
    files.append(output.write_csv(outdir / "compare_ftl_summary.csv",
                                  ("model", "t", "n_cars", "centroid"),
                                  ((k, states[k].t, states[k].n_cars,
                                    centroids[k]) for k in sorted(states))))
    files.append(output.write_gnuplot(outdir / "compare_ftl.gp",
                                      "follow-the-leaders comparison",
                                      "x", "density", clauses))
    return FtlComparison(states=states, centroids=centroids, files=files)


# --- filter study ---------------------------------------------------------

@dataclass(frozen=True)
class FilterStudyRow:
    kernel: str
    alpha: float
    gap: float
    residual: float


@dataclass(frozen=True)
class FilterStudyResult:
    rows: list
    shrink_ratios: dict      # kernel -> gap(min alpha) / gap(max alpha)
    flagged: list            # kernels whose gap failed to shrink by half
    files: list


def run_filter_study(cfg: ExperimentConfig) -> FilterStudyResult:
    """Sweep kernels over the alpha schedule and watch the y-to-w gap.

    A kernel is flagged when its gap fails to at least halve from the
    largest to the smallest filter size (weak-convergence signature).
    """
    outdir = Path(cfg.outdir)
    profile = parse_profile(cfg.profile)
    model = velocity_by_name(cfg.velocity)
    setup = pair_setup(profile, cfg.ell)
    alphas = sorted(cfg.alphas, reverse=True)

    rows = []
    for name in sorted(set(cfg.kernels)):
        kernel = Kernel(name)
        for alpha in alphas:
            traj = run(setup.y0, setup.grid, kernel, alpha, model, cfg.t_end,
                       safety=cfg.safety, record_every=RECORD_FINAL_ONLY,
                       boundary_mode=cfg.boundary,
                       tail_mass_tol=cfg.tail_tol)
            state = traj.final
            gap = filtered_gap(state.y, state.w, cfg.ell)
            residual = (exp_identity_residual(state.w, state.y, alpha, cfg.ell)
                        if name == "exp" else float("nan"))
            rows.append(FilterStudyRow(kernel=name, alpha=alpha, gap=gap,
                                       residual=residual))

    shrink_ratios, flagged = {}, []
    for name in sorted(set(cfg.kernels)):
        gaps = [r.gap for r in rows if r.kernel == name]
        if len(gaps) >= 2:
            shrink_ratios[name] = gaps[-1] / gaps[0]
            if shrink_ratios[name] > 0.5:
                flagged.append(name)

    files = [output.write_csv(
        outdir / "filter_study.csv",
        ("kernel", "alpha", "ell", "filtered_gap", "exp_residual"),
        ((r.kernel, r.alpha, cfg.ell, r.gap, r.residual) for r in rows))]
    files.append(output.write_csv(
        outdir / "filter_study_summary.csv",
        ("kernel", "gap_shrink_ratio", "weak_convergence_flag"),
        ((k, shrink_ratios.get(k, float("nan")), k in flagged)
         for k in sorted(set(cfg.kernels)))))
    return FilterStudyResult(rows=rows, shrink_ratios=shrink_ratios,
                             flagged=flagged, files=files)


def run_simulate(cfg: ExperimentConfig) -> Trajectory:
    """Raw single run of the pair scheme; writes the full trajectory CSV."""
    outdir = Path(cfg.outdir)
    profile = parse_profile(cfg.profile)
    model = velocity_by_name(cfg.velocity)
    setup = pair_setup(profile, cfg.ell)
    traj = run(setup.y0, setup.grid, Kernel(cfg.kernel), cfg.alpha, model,
               cfg.t_end, safety=cfg.safety,
               record_every=cfg.record_every or RECORD_FINAL_ONLY,
               boundary_mode=cfg.boundary, tail_mass_tol=cfg.tail_tol)
    output.write_trajectory_csv(outdir / "trajectory.csv", traj)
    return traj
