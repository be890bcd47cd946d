"""Seeded property-test campaigns over the proved scheme estimates.

Each campaign draws random CFL-compliant trials (ordered pairs, states,
constants) from a seeded generator, runs the filtered scheme, and counts
violations of one estimate beyond a 1e-12 margin.  Campaigns are
deterministic given (seed, trials) and double as a negative control: a
safety factor above one deliberately breaks the CFL condition and the
checks must then report failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagnostics as diag
from .kernels import Kernel, lagrangian_weights
from .scheme import Boundary, filtered, step_w
from .velocity import VelocityModel, linear_velocity

TOL = 1e-12

_CAMPAIGN_FAMILIES = ("exp", "tri", "box")

W_LO, W_HI = 1.0, 20.0


@dataclass(frozen=True)
class CampaignResult:
    name: str
    trials: int
    violations: int
    worst: float      # largest margin seen; <= 0 means every check had slack

    @property
    def ok(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class Trial:
    row: object
    bc: Boundary
    lam: float
    dt: float
    w: np.ndarray


def _draw_trial(rng, n_cells: int, safety: float,
                model: VelocityModel) -> Trial:
    dz = 1.0 / n_cells
    family = _CAMPAIGN_FAMILIES[rng.integers(len(_CAMPAIGN_FAMILIES))]
    alpha = dz * rng.uniform(0.5, 4.0)
    row = lagrangian_weights(Kernel(family), alpha, dz)
    bc = Boundary(left=W_LO, right=rng.uniform(W_LO, W_HI), mode="ghost")
    # sup W' over the invariant range [W_LO, W_HI]
    lam = safety / model.sup_w_prime(W_LO, W_HI)
    w = rng.uniform(W_LO, W_HI, size=n_cells)
    return Trial(row=row, bc=bc, lam=lam, dt=lam * dz, w=w)


def _campaign(name, seed, trials, per_trial) -> CampaignResult:
    worst = -np.inf
    violations = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        margin = per_trial(rng)
        worst = max(worst, margin)
        if margin > TOL:
            violations += 1
    return CampaignResult(name=name, trials=trials, violations=violations,
                          worst=float(worst))


def monotonicity_campaign(seed: int, trials: int, n_cells: int = 64,
                          n_steps: int = 50, safety: float = 0.9,
                          model: VelocityModel | None = None) -> CampaignResult:
    """Ordered pairs w >= w~ stay ordered after every step."""
    model = model or linear_velocity()

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        pair = np.stack([t.w + rng.uniform(0.0, W_HI - t.w),  # upper state
                         t.w])
        margin = -np.inf
        for _ in range(n_steps):
            pair = step_w(pair, t.row, model, t.lam, t.bc, check_cfl=False)
            margin = max(margin, float((pair[1] - pair[0]).max()))
        return margin

    return _campaign("monotonicity", seed, trials, per_trial)


def l1_contraction_campaign(seed: int, trials: int, n_cells: int = 64,
                            n_steps: int = 50, safety: float = 0.9,
                            model: VelocityModel | None = None) -> CampaignResult:
    """dz * sum |w - w~| never grows from one step to the next."""
    model = model or linear_velocity()
    dz = 1.0 / n_cells

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        pair = np.stack([t.w, rng.uniform(W_LO, W_HI, size=n_cells)])
        dist = diag.discrete_l1(pair[0], pair[1], dz)
        margin = -np.inf
        for _ in range(n_steps):
            pair = step_w(pair, t.row, model, t.lam, t.bc, check_cfl=False)
            new_dist = diag.discrete_l1(pair[0], pair[1], dz)
            margin = max(margin, new_dist - dist)
            dist = new_dist
        return margin

    return _campaign("l1_contraction", seed, trials, per_trial)


def max_principle_campaign(seed: int, trials: int, n_cells: int = 64,
                           n_steps: int = 50, safety: float = 0.9,
                           model: VelocityModel | None = None) -> CampaignResult:
    """w stays inside [min, max] of the initial data and ghost state."""
    model = model or linear_velocity()

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        w = t.w
        lo = min(float(w.min()), t.bc.right)
        hi = max(float(w.max()), t.bc.right)
        margin = -np.inf
        for _ in range(n_steps):
            w = step_w(w, t.row, model, t.lam, t.bc, check_cfl=False)
            margin = max(margin, float(w.max()) - hi, lo - float(w.min()))
        return margin

    return _campaign("max_principle", seed, trials, per_trial)


def tvd_campaign(seed: int, trials: int, n_cells: int = 64,
                 n_steps: int = 50, safety: float = 0.9,
                 model: VelocityModel | None = None) -> CampaignResult:
    """Total variation (ghost jump included) never grows, and stays below
    the variation of the generating spacings."""
    model = model or linear_velocity()

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        y0 = t.w
        w = filtered(y0, t.row, t.bc)
        bound = diag.bv_seminorm(np.append(y0, t.bc.right))
        tv = diag.bv_seminorm(np.append(w, t.bc.right))
        margin = tv - bound
        for _ in range(n_steps):
            w = step_w(w, t.row, model, t.lam, t.bc, check_cfl=False)
            new_tv = diag.bv_seminorm(np.append(w, t.bc.right))
            margin = max(margin, new_tv - tv, new_tv - bound)
            tv = new_tv
        return margin

    return _campaign("tvd", seed, trials, per_trial)


def time_continuity_campaign(seed: int, trials: int, n_cells: int = 64,
                             n_steps: int = 20, safety: float = 0.9,
                             model: VelocityModel | None = None) -> CampaignResult:
    """dz * sum |w' - w| <= dt * sup W' * BV(y0) every step."""
    model = model or linear_velocity()
    dz = 1.0 / n_cells

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        y0 = t.w
        bound = t.dt * model.sup_w_prime(W_LO, W_HI) * \
            diag.bv_seminorm(np.append(y0, t.bc.right))
        w = filtered(y0, t.row, t.bc)
        margin = -np.inf
        for _ in range(n_steps):
            w_next = step_w(w, t.row, model, t.lam, t.bc, check_cfl=False)
            margin = max(margin, diag.discrete_l1(w_next, w, dz) - bound)
            w = w_next
        return margin

    return _campaign("time_continuity", seed, trials, per_trial)


def entropy_campaign(seed: int, trials: int, n_cells: int = 64,
                     safety: float = 0.9,
                     model: VelocityModel | None = None) -> CampaignResult:
    """One-step cell entropy inequality for a random constant c."""
    model = model or linear_velocity()

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        c = rng.uniform(W_LO, W_HI)
        w_next = step_w(t.w, t.row, model, t.lam, t.bc, check_cfl=False)
        chk = diag.check_entropy_step(t.w, w_next, c, t.row, model, t.lam, t.bc)
        return chk.worst

    return _campaign("entropy_inequality", seed, trials, per_trial)


def oscillation_growth_campaign(seed: int, trials: int, n_cells: int = 64,
                                n_steps: int = 20, safety: float = 0.9,
                                model: VelocityModel | None = None) -> CampaignResult:
    """osc(w') <= osc(w) * (1 + 2 dt sup W' I_0 / dz) every step."""
    model = model or linear_velocity()
    dz = 1.0 / n_cells

    def per_trial(rng):
        t = _draw_trial(rng, n_cells, safety, model)
        factor = diag.oscillation_growth_factor(t.row, model, t.dt, dz,
                                                W_LO, W_HI)
        w = filtered(t.w, t.row, t.bc)
        osc = diag.oscillation(np.append(w, t.bc.right))
        margin = -np.inf
        for _ in range(n_steps):
            w = step_w(w, t.row, model, t.lam, t.bc, check_cfl=False)
            new_osc = diag.oscillation(np.append(w, t.bc.right))
            margin = max(margin, new_osc - factor * osc)
            osc = new_osc
        return margin

    return _campaign("oscillation_growth", seed, trials, per_trial)


def dissipation_campaign(seed: int, trials: int, n_cells: int = 48,
                         model: VelocityModel | None = None) -> CampaignResult:
    """Quadratic-entropy dissipation is nonnegative cell by cell."""
    model = model or linear_velocity()
    dz = 1.0 / n_cells

    def per_trial(rng):
        alpha = dz * rng.uniform(1.0, 8.0)
        w = rng.uniform(W_LO, W_HI, size=n_cells)
        d = diag.entropy_dissipation(w, Kernel("exp"), alpha, dz, model)
        return float(-d.min())

    return _campaign("dissipation_nonneg", seed, trials, per_trial)


def run_all(seed: int, trials: int, safety: float = 0.9) -> list[CampaignResult]:
    """Full campaign suite; heavy checks run a reduced trial count."""
    light = max(1, trials // 10)
    return [
        monotonicity_campaign(seed, trials, safety=safety),
        l1_contraction_campaign(seed, trials, safety=safety),
        max_principle_campaign(seed, trials, safety=safety),
        tvd_campaign(seed, trials, safety=safety),
        time_continuity_campaign(seed, light, safety=safety),
        entropy_campaign(seed, trials, safety=safety),
        oscillation_growth_campaign(seed, light, safety=safety),
        dissipation_campaign(seed, light),
    ]
