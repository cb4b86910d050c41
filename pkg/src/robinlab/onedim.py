"""One-dimensional Robin problems on a segment.

``nu1(beta, s0)`` is the first eigenvalue of

    X'' + nu X = 0 on (0, s0),   X'(0) = 0,   X'(s0) + beta X(s0) = 0,

whose eigenfunction is ``cos(sqrt(nu) s)`` and whose eigenvalue is the first
positive root of ``sqrt(nu) tan(sqrt(nu) s0) = beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoConvergence, NonPositiveInput, OutOfDomain

__all__ = ["OneDimEigen", "torsion_1d", "nu1", "nu1_bounds", "eigenfunction_1d"]

MAX_BISECTIONS = 200


@dataclass(frozen=True)
class OneDimEigen:
    beta: float
    s0: float
    nu1: float
    residual: float
    lower_bound: float
    upper_bound: float

    @property
    def frequency(self) -> float:
        return math.sqrt(self.nu1)


def _check_positive(**kw):
    for name, val in kw.items():
        if not (val > 0) or math.isnan(val):
            raise NonPositiveInput(f"{name} must be positive, got {val!r}")


def torsion_1d(s: float, beta: float) -> float:
    """L1 norm of the torsion function of [0, s], Robin at 0 and Neumann at s."""
    _check_positive(s=s, beta=beta)
    return s**3 / 3.0 + s**2 / beta


def nu1_bounds(beta: float, s0: float) -> tuple[float, float]:
    _check_positive(beta=beta, s0=s0)
    base = math.pi**2 / (4.0 * s0**2)
    lo = base / (1.0 + math.pi**2 / (4.0 * beta * s0))
    hi = base / (1.0 + 2.0 / (beta * s0))
    return lo, hi


def nu1(beta: float, s0: float) -> OneDimEigen:
    """First mixed Neumann-Robin eigenvalue of (0, s0), by bisection."""
    _check_positive(beta=beta, s0=s0)
    top = (math.pi / (2.0 * s0)) ** 2
    eps = 1e-14 * top
    lo, hi = eps, top - eps

    # g(x) = sqrt(x) tan(sqrt(x) s0) - beta increases from 0+ to +inf on (0, top)
    def g(x):
        w = math.sqrt(x)
        return w * math.tan(w * s0) - beta

    if g(lo) > 0:
        hi = lo
    elif g(hi) < 0:
        lo = hi
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    else:
        raise NoConvergence(f"bisection did not converge for beta={beta}, s0={s0}")

    x = 0.5 * (lo + hi)
    residual = abs(x - beta**2 / math.tan(math.sqrt(x) * s0) ** 2)
    blo, bhi = nu1_bounds(beta, s0)
    return OneDimEigen(beta=beta, s0=s0, nu1=x, residual=residual, lower_bound=blo, upper_bound=bhi)


def eigenfunction_1d(e: OneDimEigen, s: float) -> float:
    if not (0.0 <= s <= e.s0):
        raise OutOfDomain(f"s={s} outside [0, {e.s0}]")
    return math.cos(e.frequency * s)
