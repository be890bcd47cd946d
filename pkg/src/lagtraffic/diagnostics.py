"""Verification layer: seminorms, estimate checks, and rate fitting.

Every proved estimate of the filtered scheme has a check here: the
discrete entropy inequality, the per-step oscillation-growth factor,
the nonnegative entropy dissipation of the continuum limit, the
exponential-kernel identity linking y and w, and the L1 gap that
separates strong from weak convergence of the spacing variable.  All
functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, WeightRow, lagrangian_weights
from .scheme import Boundary, tail_correlate
from .velocity import VelocityModel


def bv_seminorm(v) -> float:
    """Total variation sum_i |v_{i+1} - v_i|."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("empty sequence")
    return float(np.abs(np.diff(v)).sum())


def discrete_l1(a, b, dz: float) -> float:
    """dz * sum_i |a_i - b_i|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return float(dz * np.abs(a - b).sum())


def filtered_gap(y, w, dz: float) -> float:
    """L1 distance between the spacings and their kernel average.

    Shrinks like O(alpha) exactly when the spacing variable converges
    strongly in the zero-filter limit.
    """
    return discrete_l1(y, w, dz)


def exp_identity_residual(w, y, alpha: float, dz: float) -> float:
    """Residual of the exponential-kernel identity -alpha w_z + w = y.

    Discretised with a forward difference; O(dz) for states produced
    with the exponential kernel, and not vanishing for others.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(y, dtype=float)
    if w.shape != y.shape:
        raise ValueError("length mismatch")
    if len(w) < 2:
        raise ValueError("need at least two cells")
    r = -alpha * np.diff(w) / dz + w[:-1] - y[:-1]
    return float(np.abs(r).max())


def kruzkov_flux(w, c: float, model: VelocityModel):
    """Q_c(w) = sgn(w - c)(W(w) - W(c)); equals |W(w) - W(c)| since W is
    non-decreasing."""
    w = np.asarray(w, dtype=float)
    return np.sign(w - c) * (model.w(w) - model.w(c))


@dataclass(frozen=True)
class EntropyCheck:
    ok: bool
    worst: float


def check_entropy_step(w_before, w_after, c: float, row: WeightRow,
                       model: VelocityModel, lam: float, bc: Boundary,
                       tol: float = 1e-12) -> EntropyCheck:
    """Verify the one-step cell entropy inequality

        |w_i' - c| <= |w_i - c| + lam sum_k I_k (Q_c(w_{i+k+1}) - Q_c(w_{i+k}))

    for all i, where w' is the result of the filtered-scheme step on w
    with the same row, ratio and boundary.  `worst` is the largest
    left-minus-right margin (negative means slack everywhere).
    """
    w0 = np.asarray(w_before, dtype=float)
    w1 = np.asarray(w_after, dtype=float)
    if w0.shape != w1.shape:
        raise ValueError("length mismatch")
    ghost = bc.right if bc.mode == "ghost" else float(w0[-1])
    wpad = np.concatenate([w0, np.full(row.reach, ghost)])
    dq = np.diff(kruzkov_flux(wpad, c, model))
    rhs = np.abs(w0 - c) + lam * tail_correlate(dq, row.weights)
    worst = float((np.abs(w1 - c) - rhs).max())
    return EntropyCheck(ok=worst <= tol, worst=worst)


def oscillation(v) -> float:
    """sup_i |v_{i+1} - v_i|."""
    v = np.asarray(v, dtype=float)
    return float(np.abs(np.diff(v)).max()) if len(v) > 1 else 0.0


def oscillation_growth_factor(row: WeightRow, model: VelocityModel,
                              dt: float, dz: float, w_min: float,
                              w_max: float) -> float:
    """Per-step bound: osc(w') <= osc(w) * (1 + 2 dt sup W' I_0 / dz)."""
    return 1.0 + 2.0 * dt * model.sup_w_prime(w_min, w_max) * \
        float(row.weights[0]) / dz


# --- entropy dissipation -------------------------------------------------

_GL_NODES = 24


def _h_pair(a, b, model: VelocityModel, eta_second) -> np.ndarray:
    """H(a, b) = int_a^b (int_a^sigma eta'' dmu) W'(sigma) dsigma >= 0.

    Closed form for the quadratic entropy with the linear speed law,
    Gauss-Legendre quadrature otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if eta_second is None and model.name == "linear":
        # eta'' = 1, W'(s) = 1/s^2:  int_a^b (s - a)/s^2 ds
        return np.log(b / a) + a / b - 1.0
    nodes, wts = np.polynomial.legendre.leggauss(_GL_NODES)
    mid = 0.5 * (a + b)[..., None]
    half = 0.5 * (b - a)[..., None]
    sigma = mid + half * nodes
    if eta_second is None:
        inner = sigma - a[..., None]
    else:
        # inner integral int_a^sigma eta''(mu) dmu by its own quadrature
        imid = 0.5 * (a[..., None, None] + sigma[..., None])
        ihalf = 0.5 * (sigma[..., None] - a[..., None, None])
        mu = imid + ihalf * nodes
        inner = (eta_second(mu) @ wts) * ihalf[..., 0]
    vals = inner * model.w_prime(sigma)
    return (vals @ wts) * half[..., 0]


def entropy_dissipation(w, kernel: Kernel, alpha: float, dz: float,
                        model: VelocityModel, eta_second=None,
                        subsamples: int = 4,
                        tail_mass_tol: float = 1e-12) -> np.ndarray:
    """Per-cell dissipation of a convex entropy under the nonlocal law,

        D(z) = int (-phi_alpha')(zeta) H(w(z), w(z + zeta)) dzeta >= 0,

    with H the doubly-integrated eta'' W' kernel.  The zeta integral is
    a midpoint rule with `subsamples` points per cell across the
    truncated kernel support; w extends by its last value.  Kernels
    without a classical derivative (box) are rejected.
    """
    if kernel.family == "box":
        raise ValueError("dissipation needs a differentiable kernel; "
                         "the box kernel has none")
    w = np.asarray(w, dtype=float)
    n = len(w)
    row = lagrangian_weights(kernel, alpha, dz, tail_mass_tol,
                             k_max=max(n, 2), on_cap="absorb")
    reach = row.reach
    wpad = np.concatenate([w, np.full(reach + 1, w[-1])])

    offsets = np.arange(reach + 1)[:, None] + (np.arange(subsamples) + 0.5) / subsamples
    zeta = offsets * dz                                  # (reach+1, S)
    cell_mass = (-kernel.scaled_deriv(alpha, zeta)).sum(axis=1) * dz / subsamples

    d = np.zeros(n)
    for k in range(1, reach + 1):
        d += cell_mass[k] * _h_pair(w, wpad[k:k + n], model, eta_second)
    return d


@dataclass(frozen=True)
class RateFit:
    """Least-squares log-log fit of error against filter size."""

    samples: tuple
    slope: float
    intercept: float


def rate_fit(samples) -> RateFit:
    """Fit log(error) = slope * log(alpha) + intercept."""
    pts = [(float(a), float(e)) for a, e in samples]
    if len(pts) < 2:
        raise ValueError("need at least two samples")
    if any(a <= 0 or e <= 0 for a, e in pts):
        raise ValueError("samples must be positive")
    la = np.log([a for a, _ in pts])
    le = np.log([e for _, e in pts])
    slope, intercept = np.polyfit(la, le, 1)
    return RateFit(samples=tuple(pts), slope=float(slope),
                   intercept=float(intercept))
