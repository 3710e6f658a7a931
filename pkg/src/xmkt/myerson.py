"""Revenue-optimal mechanism for the single-parameter model.

Each agent's density is ``theta_i * c_i(t)``. The mechanism picks the
disclosure time maximizing the sum of virtual values times allocations
``x_i(t)`` (live weight mass for offenders, post-disclosure mass for
defenders), and charges ``theta_i x_i(theta_i) - int_0^theta_i x_i(z) dz``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import batch
from .distributions import Distribution, Tabulated, Uniform, distribution_from_dict
from .errors import DomainError, ModelError, PreconditionError
from .model import Deterministic, MechanismResult, Profile

__all__ = [
    "Distribution", "Uniform", "Tabulated", "distribution_from_dict",
    "MhrReport", "MyersonAllocation", "virtual_value", "check_mhr", "allocate",
    "payment", "activation_threshold", "run_myerson", "quadrature_integral",
]

MHR_TOL = 1e-9
MHR_GRID = 2001
THRESHOLD_TOL = 1e-10
X_EPS = 1e-12
SIMPSON_TOL = 1e-8


def virtual_value(dist, theta: float) -> float:
    """Virtual valuation ``theta - (1 - F) / f``.

    Below the support lower bound ``a`` the value continues linearly with
    slope 1 from ``phi(a)``; reports above ``b`` raise :class:`DomainError`.
    """
    return float(dist.virtual_value(theta))


@dataclass(frozen=True)
class MhrReport:
    passed: bool
    violation: tuple[float, float] | None = None  # adjacent grid thetas where phi decreases
    values: tuple[float, float] | None = None

    def __bool__(self):
        return self.passed


def check_mhr(dist, grid_size: int = MHR_GRID) -> MhrReport:
    """Check that the virtual value is nondecreasing on a uniform grid over the support."""
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    grid = np.linspace(dist.a, dist.b, grid_size)
    phi = np.asarray(dist.virtual_value(grid))
    drops = np.nonzero(np.diff(phi) < -MHR_TOL)[0]
    if drops.size == 0:
        return MhrReport(True)
    k = int(drops[0])
    return MhrReport(False, (float(grid[k]), float(grid[k + 1])), (float(phi[k]), float(phi[k + 1])))


@lru_cache(maxsize=256)
def _mhr_ok(dist) -> MhrReport:
    return check_mhr(dist)


@dataclass(frozen=True)
class MyersonAllocation:
    t_end: float
    x: tuple[float, ...]
    objective: float


def _setup(profile: Profile):
    dists = []
    for i, a in enumerate(profile):
        if a.theta is None or a.distribution is None:
            raise ModelError(f"agent {i + 1} is not a single-parameter agent with a prior")
        d = a.distribution
        if not d.a <= a.theta <= d.b:
            raise DomainError(f"agent {i + 1} report {a.theta} outside support [{d.a}, {d.b}]")
        report = _mhr_ok(d)
        if not report:
            raise PreconditionError(
                f"agent {i + 1}: virtual value decreases between theta={report.violation[0]:.6g} "
                f"and {report.violation[1]:.6g} (MHR fails)"
            )
        dists.append(d)
    layout = batch.Layout.build([a.role for a in profile], [a.weight for a in profile])
    reports = np.array([[a.theta for a in profile]])
    return layout, dists, reports


def allocate(profile: Profile) -> MyersonAllocation:
    layout, dists, reports = _setup(profile)
    phi = batch.virtual_values(dists, reports)
    t, x, _ = batch.myerson_allocate(layout, phi)
    objective = float(np.dot(phi[0], x[0]))
    return MyersonAllocation(float(t[0]), tuple(float(v) for v in x[0]), objective)


def _adaptive_simpson(f, a, b, tol, fa, fm, fb, whole, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_adaptive_simpson(f, a, m, 0.5 * tol, fa, flm, fm, left, depth - 1)
            + _adaptive_simpson(f, m, b, 0.5 * tol, fm, frm, fb, right, depth - 1))


def adaptive_simpson(f, a: float, b: float, tol: float = SIMPSON_TOL, max_depth: int = 50) -> float:
    if b <= a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _adaptive_simpson(f, a, b, tol, fa, fm, fb, whole, max_depth)


def _threshold(x_of, theta: float) -> float | None:
    """Smallest z in [0, theta] with x(z) > X_EPS, by bisection; None if x(theta) vanishes."""
    if x_of(theta) <= X_EPS:
        return None
    if x_of(0.0) > X_EPS:
        return 0.0
    lo, hi = 0.0, theta
    while hi - lo > THRESHOLD_TOL:
        mid = 0.5 * (lo + hi)
        if x_of(mid) > X_EPS:
            hi = mid
        else:
            lo = mid
    return hi


def quadrature_integral(x_of, theta: float) -> float:
    """``int_0^theta x(z) dz`` for a nondecreasing x that may jump up from zero."""
    z_star = _threshold(x_of, theta)
    if z_star is None:
        return 0.0
    return adaptive_simpson(x_of, z_star, theta)


def _x_function(profile: Profile, i: int):
    layout, dists, reports = _setup(profile)
    return layout, dists, reports, (lambda z: batch._x_at_report(layout, dists, reports[0], i, z))


def activation_threshold(profile: Profile, i: int) -> float | None:
    """Smallest own report at which agent i's allocation becomes positive (others fixed)."""
    _, _, _, x_of = _x_function(profile, i)
    return _threshold(x_of, profile[i].distribution.b)


def payment(profile: Profile, i: int, method: str = "auto") -> float:
    """Payment of agent i (0-based).

    ``method="envelope"`` integrates the allocation exactly through the
    maximal-objective envelope (requires an affine virtual value);
    ``"quadrature"`` locates the activation threshold by bisection and then
    runs adaptive Simpson; ``"auto"`` picks the envelope when available.
    """
    layout, dists, reports, x_of = _x_function(profile, i)
    theta = float(reports[0, i])
    if method == "auto":
        method = "envelope" if dists[i].virtual_slope is not None else "quadrature"
    if method == "envelope":
        if dists[i].virtual_slope is None:
            raise DomainError("envelope payments need an affine virtual value")
        res = batch.myerson_batch(layout, dists, reports, agents=[i])
        return float(res.payments[0, i])
    if method == "quadrature":
        x_theta = x_of(theta)
        p = theta * x_theta - quadrature_integral(x_of, theta)
        return 0.0 if -batch.PAYMENT_NOISE < p < 0.0 else p
    raise ValueError(f"unknown payment method {method!r}")


def run_myerson(profile: Profile, method: str = "auto") -> MechanismResult:
    alloc = allocate(profile)
    payments = tuple(payment(profile, i, method) for i in range(len(profile)))
    valuations = tuple(a.theta * x for a, x in zip(profile, alloc.x))
    return MechanismResult(Deterministic(alloc.t_end), payments, valuations)

