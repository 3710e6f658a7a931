"""Vectorized mechanism evaluation over many report profiles.

Every objective the mechanisms maximize has the form
``sum_i w_i * C_i(t) + const`` where ``C_i(t)`` is the cumulative integral of
agent i's weight function. A :class:`Layout` stores the ``C_i`` as
coefficient arrays on a shared breakpoint grid; a batch of weight vectors
then becomes a batch of piecewise polynomials handed to the kernel in one
call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import Role
from .valuation import PiecewisePolynomial, common_breakpoints, cumulative_coefficients, integrate

TIE_TOL = kernels.TIE_TOL
# payments this far below zero are rounding noise and get clipped
PAYMENT_NOISE = 1e-9


@dataclass(frozen=True, eq=False)
class Layout:
    signs: np.ndarray   # (n,) +1 offender, -1 defender
    breaks: np.ndarray  # (P + 1,)
    cum: np.ndarray     # (n, P, D + 1)
    total: np.ndarray   # (n,)

    @classmethod
    def build(cls, roles: Sequence[Role], functions: Sequence[PiecewisePolynomial]) -> Layout:
        breaks = common_breakpoints(functions)
        deg = max(f.degree for f in functions) + 1
        cum = np.stack([cumulative_coefficients(f, breaks, deg) for f in functions])
        total = np.array([integrate(f, 0.0, 1.0) for f in functions])
        signs = np.array([r.sign for r in roles], dtype=float)
        return cls(signs, breaks, cum, total)

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def offender(self) -> np.ndarray:
        return self.signs > 0

    def cumulative_at(self, t: np.ndarray) -> np.ndarray:
        """``C_i(t_r)`` for every row r and agent i, shape (R, n)."""
        t = np.asarray(t, dtype=float)
        p = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, len(self.breaks) - 2)
        coefs = self.cum[:, p, :]  # (n, R, D+1)
        acc = np.zeros((self.n, t.shape[0]))
        for k in range(coefs.shape[2] - 1, -1, -1):
            acc = acc * t + coefs[:, :, k]
        return acc.T

    def allocation(self, beta1: np.ndarray, beta2: np.ndarray) -> np.ndarray:
        """Per-unit-theta valuation ``x_i`` of each agent at beta-family outcomes."""
        live = beta1[:, None] * self.cumulative_at(beta2)
        return np.where(self.offender, live, self.total - live)


def maximize(layout: Layout, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argmax over t in [0, 1] of ``sum_i w[r, i] * C_i(t)``."""
    coefs = np.einsum("rn,npd->rpd", w, layout.cum)
    return kernels.pp_argmax_batch(layout.breaks, coefs)


@dataclass
class BatchResult:
    beta1: np.ndarray     # (R,)
    beta2: np.ndarray     # (R,)
    x: np.ndarray         # (R, n) valuation per unit theta
    payments: np.ndarray  # (R, n); NaN for agents not requested

    def revenue(self) -> np.ndarray:
        return np.nansum(self.payments, axis=1)


def _agents(layout, agents):
    return range(layout.n) if agents is None else agents


def _clip_noise(p):
    return np.where((p < 0.0) & (p > -PAYMENT_NOISE), 0.0, p)


# -- optimal single-parameter mechanism ------------------------------------

def virtual_values(dists, reports: np.ndarray) -> np.ndarray:
    return np.column_stack([np.asarray(d.virtual_value(reports[:, i]), dtype=float).reshape(-1)
                            for i, d in enumerate(dists)])


def myerson_allocate(layout: Layout, phi: np.ndarray):
    """t_end maximizing sum_i phi_i x_i(t), plus x and the objective value."""
    t, v = maximize(layout, phi * layout.signs)
    x = layout.allocation(np.ones_like(t), t)
    return t, x, v


def _envelope(layout, phi, i, s):
    """max_t of the allocation objective with agent i's virtual value set to s."""
    w = phi * layout.signs
    w[:, i] = layout.signs[i] * s
    _, v = maximize(layout, w)
    if not layout.offender[i]:
        v = v + s * layout.total[i]
    return v


def myerson_batch(layout: Layout, dists, reports: np.ndarray, agents=None) -> BatchResult:
    """Optimal mechanism on each row of ``reports`` (shape (R, n)).

    Payments use the envelope identity: with others fixed, the maximal
    objective M(s) as a function of agent i's virtual value s is convex with
    derivative x_i, so the integral of x_i over an interval where the virtual
    value is affine in the report equals a difference of M values divided by
    the slope. Distributions without an affine virtual value fall back to
    threshold bisection plus adaptive Simpson per row.
    """
    reports = np.asarray(reports, dtype=float)
    phi = virtual_values(dists, reports)
    t, x, v = myerson_allocate(layout, phi)
    payments = np.full(reports.shape, np.nan)
    for i in _agents(layout, agents):
        d = dists[i]
        theta = reports[:, i]
        if d.virtual_slope is None:
            from .myerson import quadrature_integral  # circular at import time

            integral = np.array([
                quadrature_integral(lambda z, r=r: _x_at_report(layout, dists, reports[r], i, z), theta[r])
                for r in range(len(theta))
            ])
        else:
            m_top = v + (0.0 if layout.offender[i] else phi[:, i] * layout.total[i])
            phi_a = d.virtual_value(d.a)
            m_a = _envelope(layout, phi, i, np.full(len(theta), phi_a))
            integral = (m_top - m_a) / d.virtual_slope
            if d.a > 0.0:
                m_0 = _envelope(layout, phi, i, np.full(len(theta), phi_a - d.a))
                integral = integral + (m_a - m_0)
        payments[:, i] = _clip_noise(theta * x[:, i] - integral)
    return BatchResult(np.ones_like(t), t, x, payments)


def _x_at_report(layout, dists, row, i, z):
    row = np.array(row, dtype=float)[None, :]
    row[0, i] = z
    phi = virtual_values(dists, row)
    _, x, _ = myerson_allocate(layout, phi)
    return float(x[0, i])


def myerson_x_of_report(layout: Layout, dists, rows: np.ndarray, i: int, z: np.ndarray) -> np.ndarray:
    """x_i when agent i reports z[r] against the other reports in rows[r]."""
    rows = np.array(rows, dtype=float)
    rows[:, i] = z
    _, x, _ = myerson_allocate(layout, virtual_values(dists, rows))
    return x[:, i]


# -- affine maximizers ------------------------------------------------------

def ama_batch(layout: Layout, thetas: np.ndarray, mu: Sequence[float], zeta: float,
              randomized: bool, agents=None) -> BatchResult:
    """AMA outcome and payments for each row of ``thetas`` (shape (R, n)).

    ``thetas`` scale the layout's functions into realized densities (pass
    ones when the layout already holds densities). With ``randomized`` the
    outcome ranges over the beta family with adjustment zeta*(1-beta1)*beta2;
    the objective is affine in beta1, so only beta1 in {0, 1} is examined.
    The beta1 = 0 branch is maximized at beta2 = 1 (or 0 when zeta = 0).
    Ties prefer beta1 = 1, then smaller beta2.
    """
    thetas = np.asarray(thetas, dtype=float)
    mu = np.asarray(mu, dtype=float)
    scaled = mu * thetas
    const_parts = np.where(layout.offender, 0.0, scaled * layout.total)
    const = const_parts.sum(axis=1)
    w = scaled * layout.signs
    t1, v1 = maximize(layout, w)
    full1 = v1 + const
    beta1 = np.ones_like(t1)
    beta2 = t1
    b2_dead = 1.0 if zeta > 0.0 else 0.0
    if randomized:
        full0 = const + zeta * b2_dead
        use0 = full0 > full1 + TIE_TOL * np.maximum(1.0, np.abs(full1))
        beta1 = np.where(use0, 0.0, 1.0)
        beta2 = np.where(use0, b2_dead, t1)
    x = layout.allocation(beta1, beta2)
    values = thetas * x
    obj_star = (mu * values).sum(axis=1) + zeta * (1.0 - beta1) * beta2
    payments = np.full(thetas.shape, np.nan)
    for i in _agents(layout, agents):
        w_red = w.copy()
        w_red[:, i] = 0.0
        const_red = const - const_parts[:, i]
        _, v_red = maximize(layout, w_red)
        reduced = v_red + const_red
        if randomized:
            reduced = np.maximum(reduced, const_red + zeta * b2_dead)
        others = obj_star - mu[i] * values[:, i]
        payments[:, i] = _clip_noise((reduced - others) / mu[i])
    return BatchResult(beta1, beta2, x, payments)


# -- deliberately non-truthful test doubles ----------------------------------

def paybid_batch(layout: Layout, thetas: np.ndarray, agents=None) -> BatchResult:
    """Welfare-maximizing outcome; every agent pays her reported value for it."""
    res = ama_batch(layout, thetas, np.ones(layout.n), 0.0, False, agents=[])
    res.payments = thetas * res.x
    return res


def flatfee_batch(layout: Layout, thetas: np.ndarray, fee: float, agents=None) -> BatchResult:
    """Welfare-maximizing outcome; every agent pays ``fee``."""
    res = ama_batch(layout, thetas, np.ones(layout.n), 0.0, False, agents=[])
    res.payments = np.full(thetas.shape, float(fee))
    return res
