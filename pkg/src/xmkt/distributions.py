"""Priors over single-parameter types and their virtual valuations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DistributionError, DomainError


def _check_report(dist, theta):
    if np.any(np.asarray(theta) > dist.b):
        raise DomainError(f"report above support upper bound {dist.b}")


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (self.a >= 0.0 and self.b > self.a):
            raise DistributionError(f"uniform support needs 0 <= a < b, got a={self.a}, b={self.b}")

    # affine virtual value: enables the exact envelope payment
    virtual_slope = 2.0

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        inside = (theta >= self.a) & (theta <= self.b)
        return np.where(inside, 1.0 / (self.b - self.a), 0.0)

    def cdf(self, theta):
        return np.clip((np.asarray(theta, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def ppf(self, u):
        return self.a + np.asarray(u, dtype=float) * (self.b - self.a)

    def virtual_value(self, theta):
        """theta - (1 - F) / f, extended below the support with slope 1."""
        _check_report(self, theta)
        theta = np.asarray(theta, dtype=float)
        phi = np.where(theta >= self.a, 2.0 * theta - self.b, theta + self.a - self.b)
        return float(phi) if phi.ndim == 0 else phi

    def to_dict(self) -> dict:
        return {"type": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Tabulated:
    """Density given at nodes, linearly interpolated; the CDF integrates it exactly.

    The table is renormalized to unit mass.
    """

    thetas: tuple[float, ...]
    pdf_values: tuple[float, ...]

    virtual_slope = None

    def __post_init__(self):
        xs = tuple(float(x) for x in self.thetas)
        fs = tuple(float(f) for f in self.pdf_values)
        if len(xs) < 2 or len(xs) != len(fs):
            raise DistributionError("table needs at least two (theta, pdf) nodes of equal length")
        if xs[0] < 0.0 or any(x0 >= x1 for x0, x1 in zip(xs, xs[1:])):
            raise DistributionError("table thetas must be nonnegative and strictly increasing")
        if any(f < 0.0 for f in fs):
            raise DistributionError("table pdf must be nonnegative")
        if any(f <= 0.0 for f in fs[:-1]):
            raise DistributionError("table pdf must be positive below the support upper bound")
        x, f = np.array(xs), np.array(fs)
        mass = float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(x)))
        f = f / mass
        object.__setattr__(self, "thetas", xs)
        object.__setattr__(self, "pdf_values", tuple(f.tolist()))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
        cum[-1] = 1.0
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_cum", cum)

    def __hash__(self):
        return hash((self.thetas, self.pdf_values))

    @property
    def a(self) -> float:
        return self.thetas[0]

    @property
    def b(self) -> float:
        return self.thetas[-1]

    def _segment(self, theta):
        j = np.searchsorted(self._x, theta, side="right") - 1
        return np.clip(j, 0, len(self._x) - 2)

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.where((theta >= self.a) & (theta <= self.b), np.interp(theta, self._x, self._f), 0.0)

    def cdf(self, theta):
        theta = np.clip(np.asarray(theta, dtype=float), self.a, self.b)
        j = self._segment(theta)
        h = self._x[j + 1] - self._x[j]
        d = theta - self._x[j]
        slope = (self._f[j + 1] - self._f[j]) / h
        return np.clip(self._cum[j] + self._f[j] * d + 0.5 * slope * d * d, 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        j = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, len(self._x) - 2)
        h = self._x[j + 1] - self._x[j]
        slope = (self._f[j + 1] - self._f[j]) / h
        r = np.maximum(u - self._cum[j], 0.0)
        fj = self._f[j]
        disc = np.sqrt(np.maximum(fj * fj + 2.0 * slope * r, 0.0))
        denom = fj + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(denom > 0.0, 2.0 * r / denom, 0.0)
        return np.clip(self._x[j] + np.minimum(d, h), self.a, self.b)

    def virtual_value(self, theta):
        _check_report(self, theta)
        theta = np.asarray(theta, dtype=float)
        t_in = np.maximum(theta, self.a)
        tail = 1.0 - self.cdf(t_in)
        f = self.pdf(t_in)
        if np.any((f <= 0.0) & (tail > 0.0)):
            raise DistributionError("pdf vanishes inside the support")
        with np.errstate(divide="ignore", invalid="ignore"):
            phi_in = np.where(tail > 0.0, t_in - tail / f, t_in)
        phi = np.where(theta >= self.a, phi_in, phi_in - (self.a - theta))
        return float(phi) if phi.ndim == 0 else phi

    def to_dict(self) -> dict:
        return {"type": "table", "thetas": list(self.thetas), "pdf": list(self.pdf_values)}


Distribution = Uniform | Tabulated


def distribution_from_dict(data: dict):
    kind = data.get("type")
    if kind == "uniform":
        return Uniform(data["a"], data["b"])
    if kind == "table":
        return Tabulated(tuple(data["thetas"]), tuple(data["pdf"]))
    raise DistributionError(f"unknown distribution type {kind!r}")
