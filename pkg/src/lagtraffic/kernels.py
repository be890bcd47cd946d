"""Averaging kernels and the discrete quadrature weights they induce.

A kernel is a nonnegative, non-increasing density on [0, inf) with unit
mass.  The scaled family is ``(1/alpha) * phi(z/alpha)``.  Both the
Lagrangian (Toeplitz) and Eulerian (position-dependent) weight rows are
built from the closed-form cumulative distribution, so the weights carry
no numerical-integration error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("exp", "tri", "box", "rat2", "cauchy")

# Families excluded from the convergence theory: "cauchy" has an infinite
# first moment, "box" is discontinuous.
_NOT_COVERED = frozenset({"box", "cauchy"})


class TruncationError(RuntimeError):
    """Weight-row truncation could not reach the requested tail mass."""


def _as_nonneg(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("kernel argument must be nonnegative")
    return z


@dataclass(frozen=True)
class Kernel:
    """One averaging-kernel family, selected by name."""

    family: str
    theory_covered: bool = field(init=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; "
                             f"choose one of {FAMILIES}")
        object.__setattr__(self, "theory_covered",
                           self.family not in _NOT_COVERED)

    def value(self, z):
        """Density phi(z) for z >= 0."""
        z = _as_nonneg(z)
        if self.family == "exp":
            out = np.exp(-z)
        elif self.family == "tri":
            out = 2.0 * np.maximum(1.0 - z, 0.0)
        elif self.family == "box":
            # support (0, 1); the value at the jump z = 1 is taken as 0
            out = np.where(z < 1.0, 1.0, 0.0)
        elif self.family == "rat2":
            out = (4.0 / math.pi) / (1.0 + z * z) ** 2
        else:  # cauchy
            out = (2.0 / math.pi) / (1.0 + z * z)
        return out if out.ndim else float(out)

    def cdf(self, z):
        """Cumulative mass integral of phi over [0, z], in closed form."""
        z = _as_nonneg(z)
        if self.family == "exp":
            out = -np.expm1(-z)
        elif self.family == "tri":
            zc = np.minimum(z, 1.0)
            out = zc * (2.0 - zc)
        elif self.family == "box":
            out = np.minimum(z, 1.0)
        elif self.family == "rat2":
            with np.errstate(invalid="ignore"):
                frac = np.where(np.isinf(z), 0.0, z / (1.0 + z * z))
            out = (2.0 / math.pi) * (np.arctan(z) + frac)
        else:  # cauchy
            out = (2.0 / math.pi) * np.arctan(z)
        return out if out.ndim else float(out)

    def deriv(self, z):
        """Classical derivative phi'(z); undefined for the box kernel."""
        if self.family == "box":
            raise ValueError("box kernel has no classical derivative")
        z = _as_nonneg(z)
        if self.family == "exp":
            out = -np.exp(-z)
        elif self.family == "tri":
            out = np.where(z < 1.0, -2.0, 0.0)
        elif self.family == "rat2":
            out = -(16.0 / math.pi) * z / (1.0 + z * z) ** 3
        else:  # cauchy
            out = -(4.0 / math.pi) * z / (1.0 + z * z) ** 2
        return out if out.ndim else float(out)

    def scaled_value(self, alpha: float, z):
        """(1/alpha) * phi(z/alpha) for filter size alpha > 0."""
        _check_alpha(alpha)
        z = np.asarray(z, dtype=float)
        out = self.value(z / alpha) / alpha
        return out if np.ndim(out) else float(out)

    def scaled_cdf(self, alpha: float, z):
        """Mass of the scaled kernel over [0, z]."""
        _check_alpha(alpha)
        z = np.asarray(z, dtype=float)
        out = self.cdf(z / alpha)
        return out if np.ndim(out) else float(out)

    def scaled_deriv(self, alpha: float, z):
        """Derivative of the scaled kernel, (1/alpha^2) * phi'(z/alpha)."""
        _check_alpha(alpha)
        z = np.asarray(z, dtype=float)
        out = self.deriv(z / alpha) / alpha**2
        return out if np.ndim(out) else float(out)


def _check_alpha(alpha: float):
    if not alpha > 0:
        raise ValueError(f"filter size alpha must be positive, got {alpha}")


def kernel_by_name(name: str) -> Kernel:
    return Kernel(name)


@dataclass(frozen=True)
class WeightRow:
    """Toeplitz quadrature row I_0..I_K for the Lagrangian average.

    I_j is the scaled-kernel mass of the cell [j*dz, (j+1)*dz); the last
    entry absorbs the residual tail so the row sums to one exactly.  The
    row is immutable after construction and safe to share across threads.
    """

    alpha: float
    dz: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def reach(self) -> int:
        """Number of downstream cells the row looks at."""
        return len(self.weights)


def lagrangian_weights(kernel: Kernel, alpha: float, dz: float,
                       tail_mass_tol: float = 1e-12,
                       k_max: int = 2_000_000,
                       on_cap: str = "error") -> WeightRow:
    """Build the Toeplitz row I_j = cdf((j+1)dz/alpha) - cdf(j dz/alpha).

    Truncates at the smallest K whose remaining tail mass is at most
    ``tail_mass_tol`` and folds the exact residual into the final entry,
    so the row mass is one.  By translation invariance one row serves
    every cell.  If the tail cannot be brought below tolerance within
    ``k_max`` cells (heavy-tailed kernels), ``on_cap`` decides: "error"
    raises TruncationError, "absorb" folds whatever mass is left at the
    cap into the last entry (exact whenever the data is constant from
    that point on, e.g. beyond a simulation window).
    """
    _check_alpha(alpha)
    if not dz > 0:
        raise ValueError(f"cell width dz must be positive, got {dz}")
    if not 0.0 < tail_mass_tol < 1.0:
        raise ValueError("tail_mass_tol must lie in (0, 1)")
    if on_cap not in ("error", "absorb"):
        raise ValueError(f"on_cap must be 'error' or 'absorb', got {on_cap!r}")

    h = dz / alpha

    def tail(k: int) -> float:
        return 1.0 - float(kernel.cdf(k * h))

    # geometric bracket then bisection for the smallest k with tail <= tol
    k_hi = 1
    while tail(k_hi) > tail_mass_tol and k_hi < k_max:
        k_hi = min(2 * k_hi, k_max)
    if tail(k_hi) > tail_mass_tol:
        if on_cap == "error":
            raise TruncationError(
                f"{kernel.family} kernel: tail mass {tail(k_hi):.3e} after "
                f"{k_hi} cells still above tolerance {tail_mass_tol:.3e}")
        k = k_max
    else:
        k_lo = 0                          # tail(0) = 1 > tol always
        while k_lo + 1 < k_hi:
            k_mid = (k_lo + k_hi) // 2
            if tail(k_mid) > tail_mass_tol:
                k_lo = k_mid
            else:
                k_hi = k_mid
        k = k_hi

    cdf_vals = kernel.cdf(h * np.arange(k + 1))
    diffs = np.diff(cdf_vals)
    residual = 1.0 - math.fsum(diffs)
    if residual > 0.0:
        weights = np.append(diffs, residual)
    else:
        weights = diffs
    return WeightRow(alpha=alpha, dz=dz, weights=weights)


def eulerian_weights(kernel: Kernel, alpha: float, positions, i: int) -> np.ndarray:
    """Weights over cells j = i..N for one row of the Eulerian matrix.

    ``positions`` are the N+1 sorted cell edges x_i..x_{N+1}; the last
    may be ``inf``, in which case the final weight absorbs the tail (the
    row for i = N is exactly [1]).
    """
    x = np.asarray(positions, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    if not 0 <= i < len(x) - 1:
        raise ValueError(f"row index {i} out of range")
    _check_alpha(alpha)
    c = kernel.cdf((x[i:] - x[i]) / alpha)
    w = np.diff(c)
    # force exact unit mass through the final tail-absorbing entry
    w[-1] = max(0.0, 1.0 - math.fsum(w[:-1]))
    return w


def eulerian_weight_matrix(kernel: Kernel, alpha: float, positions) -> np.ndarray:
    """Upper-triangular matrix of eulerian_weights rows, vectorised.

    ``positions`` are N+1 edges (last may be inf); returns an N x N
    matrix whose row i holds the weights for cells j >= i and zeros
    below the diagonal.  Each row sums to one exactly up to rounding of
    the final tail-absorbing column.
    """
    x = np.asarray(positions, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    _check_alpha(alpha)
    n = len(x) - 1
    gaps = x[None, :] - x[:n, None]
    c = kernel.cdf(np.maximum(gaps, 0.0) / alpha)
    mat = c[:, 1:] - c[:, :-1]
    mat[:, -1] = 1.0 - c[:, -2]          # absorb the tail beyond x_N
    return np.triu(mat)
