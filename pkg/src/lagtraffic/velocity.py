"""Speed laws V(u) and their spacing-variable counterparts W(w) = V(1/w).

V maps density u in [0, 1] to speed in [0, 1], is non-increasing and
Lipschitz with V(1) = 0.  In the spacing variable w = 1/u >= 1 the law
W(w) = V(1/w) is non-decreasing with W'(w) = -V'(1/w)/w^2 >= 0; its
supremum over a w-range drives the CFL restriction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class VelocityModel:
    name: str
    v: Callable                # speed from density, V(u)
    lipschitz_v: float
    w: Callable                # speed from spacing, W(w) = V(1/w)
    w_prime: Callable          # pointwise W'(w)
    _sup_w_prime: Callable     # exact sup of W' on [w_min, w_max]

    def sup_w_prime(self, w_min: float, w_max: float) -> float:
        """Supremum of W' over [w_min, w_max] (upper bound for generic V)."""
        if not 1.0 <= w_min <= w_max:
            raise ValueError(f"need 1 <= w_min <= w_max, got [{w_min}, {w_max}]")
        return float(self._sup_w_prime(w_min, w_max))

    def flux(self, rho):
        """Eulerian flux f(rho) = rho * V(rho)."""
        return rho * self.v(rho)


def linear_velocity() -> VelocityModel:
    """V(u) = 1 - u, hence W(w) = 1 - 1/w and W'(w) = 1/w^2."""
    return VelocityModel(
        name="linear",
        v=lambda u: 1.0 - np.asarray(u, dtype=float),
        lipschitz_v=1.0,
        w=lambda w: 1.0 - 1.0 / np.asarray(w, dtype=float),
        w_prime=lambda w: 1.0 / np.asarray(w, dtype=float) ** 2,
        _sup_w_prime=lambda lo, hi: 1.0 / lo**2,
    )


def from_speed_function(name: str, v: Callable, lipschitz_v: float,
                        fd_step: float = 1e-6) -> VelocityModel:
    """Wrap a generic non-increasing Lipschitz V.

    W' is a central finite difference and the CFL supremum uses the
    conservative bound sup W' <= L_V / w_min^2, which keeps the scheme
    on the safe side of the CFL condition.
    """
    if not lipschitz_v > 0:
        raise ValueError("lipschitz_v must be positive")

    def w(s):
        return v(1.0 / np.asarray(s, dtype=float))

    def w_prime(s):
        s = np.asarray(s, dtype=float)
        return (w(s + fd_step) - w(s - fd_step)) / (2.0 * fd_step)

    return VelocityModel(
        name=name, v=v, lipschitz_v=lipschitz_v, w=w, w_prime=w_prime,
        _sup_w_prime=lambda lo, hi: lipschitz_v / lo**2,
    )


_REGISTRY = {
    "linear": linear_velocity,
    # mildly nonlinear law used to exercise the generic code path
    "quadratic": lambda: from_speed_function(
        "quadratic", lambda u: 1.0 - np.asarray(u, dtype=float) ** 2, 2.0),
}


def velocity_by_name(name: str) -> VelocityModel:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown velocity model {name!r}; "
                         f"choose one of {sorted(_REGISTRY)}") from None
