"""Exact calculus for nonnegative piecewise polynomials on [0, 1].

Valuation densities and weight functions are stored as piecewise
polynomials, so every integral and every one-dimensional argmax the
mechanisms need can be computed exactly (up to root-finding tolerance).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError

NONNEG_TOL = 1e-12


def _antiderivative(coeffs: Sequence[float]) -> list[float]:
    return [0.0] + [c / (k + 1) for k, c in enumerate(coeffs)]


def _horner(coeffs: Sequence[float], t: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class PiecewisePolynomial:
    """A nonnegative piecewise polynomial on [0, 1].

    ``pieces[k]`` holds ascending-power coefficients (in the global variable
    t, not shifted) used on ``[breakpoints[k], breakpoints[k+1])``. The last
    piece also covers t = 1.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        pieces = tuple(tuple(float(c) for c in p) for p in self.pieces)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)
        if len(bps) < 2 or bps[0] != 0.0 or bps[-1] != 1.0:
            raise DomainError("breakpoints must start at 0 and end at 1")
        if any(b0 >= b1 for b0, b1 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(pieces) != len(bps) - 1:
            raise DomainError(
                f"expected {len(bps) - 1} pieces for {len(bps)} breakpoints, got {len(pieces)}"
            )
        for k, p in enumerate(pieces):
            if not p:
                raise DomainError(f"piece {k} has no coefficients")
            if not all(math.isfinite(c) for c in p):
                raise DomainError(f"piece {k} has non-finite coefficients")
            lo, hi = bps[k], bps[k + 1]
            _, neg_min = kernels.poly_argmax([-c for c in p], lo, hi)
            scale_ = max(1.0, max(abs(c) for c in p))
            if -neg_min < -NONNEG_TOL * scale_:
                raise DomainError(
                    f"piece {k} is negative on [{lo}, {hi}] (min {-neg_min:.6g})"
                )

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> PiecewisePolynomial:
        return cls((0.0, 1.0), (tuple(coeffs),))

    @classmethod
    def constant(cls, value: float) -> PiecewisePolynomial:
        return cls.polynomial((value,))

    @classmethod
    def from_dict(cls, data: dict) -> PiecewisePolynomial:
        return cls(tuple(data["breakpoints"]), tuple(tuple(p) for p in data["pieces"]))

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "pieces": [list(p) for p in self.pieces]}

    @property
    def degree(self) -> int:
        return max(len(p) for p in self.pieces) - 1

    def piece_index(self, t: float) -> int:
        k = bisect.bisect_right(self.breakpoints, t) - 1
        return min(k, len(self.pieces) - 1)

    def __call__(self, t: float) -> float:
        return evaluate(self, t)


def evaluate(pp: PiecewisePolynomial, t: float) -> float:
    """Value at t; interior breakpoints take the right-hand piece."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0, 1]")
    return _horner(pp.pieces[pp.piece_index(t)], t)


def integrate(pp: PiecewisePolynomial, a: float, b: float) -> float:
    """Exact integral of ``pp`` over [a, b] via per-piece antiderivatives."""
    if a > b:
        raise DomainError(f"empty interval: a={a} > b={b}")
    if a < 0.0 or b > 1.0:
        raise DomainError(f"[{a}, {b}] not inside [0, 1]")
    if a == b:
        return 0.0
    total = 0.0
    bps = pp.breakpoints
    for k, p in enumerate(pp.pieces):
        lo, hi = max(a, bps[k]), min(b, bps[k + 1])
        if lo < hi:
            anti = _antiderivative(p)
            total += _horner(anti, hi) - _horner(anti, lo)
    return max(total, 0.0)


def scale(pp: PiecewisePolynomial, k: float) -> PiecewisePolynomial:
    """Pointwise product ``k * pp`` for k >= 0."""
    if k < 0:
        raise DomainError(f"scale factor {k} is negative")
    return PiecewisePolynomial(pp.breakpoints, tuple(tuple(k * c for c in p) for p in pp.pieces))


def argmax_polynomial(coeffs: Sequence[float], lo: float, hi: float) -> tuple[float, float]:
    """Global maximizer and maximum of a polynomial on [lo, hi].

    Critical points come from sign-change bisection on the derivative
    (tolerance 1e-12); values within ``1e-14 * max(1, |max|)`` of the maximum
    count as ties and the smallest such t wins.
    """
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    t, v = kernels.poly_argmax(list(coeffs), lo, hi)
    return float(t), float(v)


def common_breakpoints(pps: Iterable[PiecewisePolynomial], extra: Iterable[float] = ()) -> np.ndarray:
    """Sorted union of breakpoints of several functions (plus ``extra`` points)."""
    pts = {0.0, 1.0}
    for pp in pps:
        pts.update(pp.breakpoints)
    pts.update(float(x) for x in extra if 0.0 < x < 1.0)
    return np.array(sorted(pts))


def cumulative_coefficients(pp: PiecewisePolynomial, breaks: Sequence[float], degree: int | None = None) -> np.ndarray:
    """Coefficients of ``t -> integral of pp over [0, t]`` on each interval of ``breaks``.

    ``breaks`` must refine ``pp.breakpoints``. Returns an array of shape
    (len(breaks) - 1, degree + 1) in the global power basis; ``degree``
    defaults to ``pp.degree + 1`` and pads with zeros when larger.
    """
    deg = pp.degree + 1 if degree is None else degree
    if deg < pp.degree + 1:
        raise DomainError("requested degree too small for the antiderivative")
    bps = pp.breakpoints
    # cumulative integral at each original breakpoint
    offsets = []
    acc = 0.0
    for k, p in enumerate(pp.pieces):
        anti = _antiderivative(p)
        offsets.append(acc - _horner(anti, bps[k]))
        acc += _horner(anti, bps[k + 1]) - _horner(anti, bps[k])
    out = np.zeros((len(breaks) - 1, deg + 1))
    for j in range(len(breaks) - 1):
        k = pp.piece_index(breaks[j])
        if breaks[j + 1] > bps[k + 1] + 1e-15:
            raise DomainError("breaks do not refine the function's breakpoints")
        anti = _antiderivative(pp.pieces[k])
        out[j, : len(anti)] = anti
        out[j, 0] += offsets[k]
    return out
