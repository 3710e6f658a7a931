"""Monte Carlo revenue estimation, truthfulness audits and AMA parameter tuning.

Randomness is counter based: the uniform driving agent i in sample k is
output ``k * n_agents + i`` of a Philox stream keyed by (seed, purpose), so
any chunking or worker count reproduces the same draws, and every
mechanism evaluated with the same seed sees the same profiles.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import batch
from .ama import AmaParams
from .errors import DomainError, ModelError, PreconditionError
from .model import Agent, Profile
from .myerson import check_mhr

log = logging.getLogger(__name__)

CHUNK = 1 << 16
STREAM_TYPES, STREAM_DEVIATIONS, STREAM_FIXINGS, STREAM_PARAMS = 0, 1, 2, 3
MECHANISMS = ("myerson", "vcg", "ama", "broken-paybid", "broken-flatfee")


# -- scenarios and mechanisms ----------------------------------------------

@dataclass(frozen=True, eq=False)
class Scenario:
    """Agent templates (role, weight c_i, prior, optional fixed theta) plus run defaults."""

    agents: tuple[Agent, ...]
    seed: int = 0
    n: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise ModelError("a scenario needs at least one agent")
        for i, a in enumerate(self.agents):
            if a.distribution is None:
                raise ModelError(f"agent {i + 1} has no prior distribution")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def dists(self):
        return [a.distribution for a in self.agents]

    @cached_property
    def layout(self) -> batch.Layout:
        return batch.Layout.build([a.role for a in self.agents], [a.weight for a in self.agents])

    @property
    def fixed_thetas(self) -> tuple[float, ...] | None:
        thetas = tuple(a.theta for a in self.agents)
        return None if any(t is None for t in thetas) else thetas

    def profile(self, thetas: Sequence[float]) -> Profile:
        if len(thetas) != self.n_agents:
            raise DomainError(f"need {self.n_agents} thetas, got {len(thetas)}")
        return Profile(tuple(a.with_theta(float(t)) for a, t in zip(self.agents, thetas)))


@dataclass(frozen=True)
class MechanismSpec:
    kind: str
    params: AmaParams | None = None
    fee: float = 1.0

    def __post_init__(self):
        if self.kind not in MECHANISMS:
            raise DomainError(f"unknown mechanism {self.kind!r}; choose from {MECHANISMS}")
        if self.kind == "ama" and self.params is None:
            raise DomainError("ama needs parameters")

    @classmethod
    def myerson(cls) -> MechanismSpec:
        return cls("myerson")

    @classmethod
    def vcg(cls) -> MechanismSpec:
        return cls("vcg")

    @classmethod
    def ama(cls, mu, zeta=0.0, space="beta") -> MechanismSpec:
        return cls("ama", AmaParams(tuple(mu), zeta, space))

    def describe(self) -> dict:
        out = {"mechanism": self.kind}
        if self.params is not None:
            out.update(mu=list(self.params.mu), zeta=self.params.zeta, space=self.params.space)
        if self.kind == "broken-flatfee":
            out["fee"] = self.fee
        return out


def check_preconditions(scenario: Scenario, mech: MechanismSpec) -> None:
    if mech.kind == "myerson":
        for i, d in enumerate(scenario.dists):
            report = check_mhr(d)
            if not report:
                raise PreconditionError(
                    f"agent {i + 1}: MHR fails, virtual value decreases between "
                    f"theta={report.violation[0]:.6g} and {report.violation[1]:.6g}"
                )
    if mech.params is not None and len(mech.params.mu) != scenario.n_agents:
        raise DomainError(f"{len(mech.params.mu)} weights for {scenario.n_agents} agents")


def evaluate_batch(scenario: Scenario, mech: MechanismSpec, reports: np.ndarray, agents=None) -> batch.BatchResult:
    """Run ``mech`` on every row of ``reports``; payments only for ``agents`` (default all)."""
    layout = scenario.layout
    if mech.kind == "myerson":
        return batch.myerson_batch(layout, scenario.dists, reports, agents=agents)
    if mech.kind == "vcg":
        return batch.ama_batch(layout, reports, np.ones(layout.n), 0.0, False, agents=agents)
    if mech.kind == "ama":
        p = mech.params
        return batch.ama_batch(layout, reports, p.mu, p.zeta, p.randomized, agents=agents)
    if mech.kind == "broken-paybid":
        return batch.paybid_batch(layout, reports)
    return batch.flatfee_batch(layout, reports, mech.fee)


# -- sampling ----------------------------------------------------------------

def uniforms(seed: int, start: int, stop: int, n_agents: int, stream: int = STREAM_TYPES) -> np.ndarray:
    """Uniforms in [0, 1) for samples ``start..stop-1``, shape (stop - start, n_agents)."""
    key = (int(stream) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)
    bg = np.random.Philox(key=key)
    first = start * n_agents
    bg.advance(first // 4)
    raw = bg.random_raw(first % 4 + (stop - start) * n_agents)[first % 4:]
    return ((raw >> np.uint64(11)).astype(np.float64) * 2.0**-53).reshape(stop - start, n_agents)


def sample_thetas(scenario: Scenario, start: int, stop: int, seed: int | None = None) -> np.ndarray:
    seed = scenario.seed if seed is None else seed
    u = uniforms(seed, start, stop, scenario.n_agents)
    return np.column_stack([np.asarray(d.ppf(u[:, i])) for i, d in enumerate(scenario.dists)])


def sample_profile(scenario: Scenario, k: int, seed: int | None = None) -> Profile:
    """The k-th sampled profile (inverse-CDF sampling)."""
    return scenario.profile(sample_thetas(scenario, k, k + 1, seed)[0])


# -- revenue estimation ------------------------------------------------------

@dataclass(frozen=True)
class RevenueEstimate:
    mean: float
    stderr: float
    n: int
    mechanism: dict
    seed: int

    def to_dict(self) -> dict:
        out = dict(self.mechanism)
        out.update(n=self.n, mean=self.mean, stderr=self.stderr, seed=self.seed)
        return out


def _summarize(values: np.ndarray, mech: MechanismSpec, seed: int) -> RevenueEstimate:
    n = len(values)
    flat = values.tolist()
    mean = math.fsum(flat) / n
    var = math.fsum((v - mean) ** 2 for v in flat) / (n - 1)
    return RevenueEstimate(mean, math.sqrt(var / n), n, mech.describe(), seed)


def revenue_samples(scenario: Scenario, mech: MechanismSpec, n: int, seed: int | None = None,
                    workers: int = 1) -> np.ndarray:
    """Per-sample revenue for samples 0..n-1; chunk layout is fixed, so results
    do not depend on ``workers``."""
    seed = scenario.seed if seed is None else seed
    check_preconditions(scenario, mech)
    bounds = [(k, min(k + CHUNK, n)) for k in range(0, n, CHUNK)]

    def run(bound):
        k0, k1 = bound
        try:
            return evaluate_batch(scenario, mech, sample_thetas(scenario, k0, k1, seed)).revenue()
        except Exception as exc:  # re-raise with the sample range attached
            raise type(exc)(f"samples [{k0}, {k1}): {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return np.concatenate(parts)


def estimate_revenue(scenario: Scenario, mech: MechanismSpec, n: int, seed: int | None = None,
                     workers: int = 1) -> RevenueEstimate:
    if n < 2:
        raise DomainError("need at least two samples")
    seed = scenario.seed if seed is None else seed
    return _summarize(revenue_samples(scenario, mech, n, seed, workers), mech, seed)


def vcg_revenue_oracle(offender, defender) -> float:
    """Expected VCG revenue for one offender with c = 1 - t and one defender with c = 1.

    Both priors uniform with the defender's support below the offender's, so
    the welfare optimum ``t = 1 - theta2/theta1`` is interior and revenue is
    ``theta2 - theta2**2 / (2 theta1)`` sample by sample.
    """
    a1, b1, a2, b2 = offender.a, offender.b, defender.a, defender.b
    if not (0 < a1 and b2 <= a1):
        raise DomainError("closed form needs 0 < a1 and b2 <= a1")
    e_t2 = 0.5 * (a2 + b2)
    e_t2_sq = (b2**3 - a2**3) / (3.0 * (b2 - a2))
    e_inv_t1 = math.log(b1 / a1) / (b1 - a1)
    return e_t2 - 0.5 * e_t2_sq * e_inv_t1


# -- truthfulness audits -----------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str       # "sp" or "ir"
    sample: int     # profile index k (reproduce with sample_profile(scenario, k, seed))
    agent: int      # 1-based
    theta: float
    report: float | None
    amount: float   # utility gain from deviating (sp) or utility shortfall below zero (ir)
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def deviation_reports(scenario: Scenario, thetas: np.ndarray, n_deviations: int, seed: int) -> np.ndarray:
    """Misreports of shape (profiles, agents, n_deviations).

    The first two deviations are the support endpoints; the rest rescale the
    true type by a log-uniform factor in [1/4, 4], clipped to the support.
    """
    n_prof, n_ag = thetas.shape
    u = uniforms(seed, 0, n_prof * n_deviations, n_ag, STREAM_DEVIATIONS)
    u = u.reshape(n_prof, n_deviations, n_ag).transpose(0, 2, 1)
    factor = np.exp(np.log(0.25) + u * np.log(16.0))
    out = thetas[:, :, None] * factor
    for i, d in enumerate(scenario.dists):
        out[:, i, :] = np.clip(out[:, i, :], d.a, d.b)
        out[:, i, 0] = d.a
        if n_deviations > 1:
            out[:, i, 1] = d.b
    return out


def check_ir(scenario: Scenario, mech: MechanismSpec, n_profiles: int, eps: float = 1e-9,
             seed: int | None = None) -> list[Violation]:
    seed = scenario.seed if seed is None else seed
    check_preconditions(scenario, mech)
    thetas = sample_thetas(scenario, 0, n_profiles, seed)
    res = evaluate_batch(scenario, mech, thetas)
    util = thetas * res.x - res.payments
    bad = np.argwhere(util < -eps)
    return [Violation("ir", int(k), int(i) + 1, float(thetas[k, i]), None, float(-util[k, i]), seed)
            for k, i in bad]


def check_sp(scenario: Scenario, mech: MechanismSpec, n_profiles: int, n_deviations: int,
             eps: float = 1e-6, seed: int | None = None) -> list[Violation]:
    """Report every (profile, agent, misreport) whose utility beats truth by more than eps."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    seed = scenario.seed if seed is None else seed
    check_preconditions(scenario, mech)
    thetas = sample_thetas(scenario, 0, n_profiles, seed)
    truth = evaluate_batch(scenario, mech, thetas)
    true_util = thetas * truth.x - truth.payments
    devs = deviation_reports(scenario, thetas, n_deviations, seed)
    out = []
    for i in range(scenario.n_agents):
        rows = np.repeat(thetas, n_deviations, axis=0)
        rows[:, i] = devs[:, i, :].reshape(-1)
        res = evaluate_batch(scenario, mech, rows, agents=[i])
        own = np.repeat(thetas[:, i], n_deviations)
        gain = (own * res.x[:, i] - res.payments[:, i]) - np.repeat(true_util[:, i], n_deviations)
        for r in np.nonzero(gain > eps)[0]:
            k = int(r // n_deviations)
            out.append(Violation("sp", k, i + 1, float(thetas[k, i]), float(rows[r, i]), float(gain[r]), seed))
    return out


@dataclass(frozen=True)
class MonotonicityReport:
    agent: int                       # 1-based
    passed: bool
    max_drop: float
    thresholds: tuple[float, ...]    # activation threshold per fixing (nan if never active)
    fixings: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"agent": self.agent, "passed": self.passed, "max_drop": self.max_drop,
                "thresholds": [None if math.isnan(t) else t for t in self.thresholds]}


def _x_of(scenario, mech, rows, i, z):
    rows = np.array(rows, dtype=float)
    rows[:, i] = z
    return evaluate_batch(scenario, mech, rows, agents=[]).x[:, i]


def activation_thresholds(scenario: Scenario, mech: MechanismSpec, fixings: np.ndarray, i: int,
                          tol: float = 1e-10, x_eps: float = 1e-12) -> np.ndarray:
    """Smallest own report in [0, b] with x_i > x_eps for each row of ``fixings`` (bisection)."""
    b = scenario.dists[i].b
    m = len(fixings)
    lo, hi = np.zeros(m), np.full(m, b)
    never = _x_of(scenario, mech, fixings, i, hi) <= x_eps
    hi = np.where(_x_of(scenario, mech, fixings, i, lo) > x_eps, 0.0, hi)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        on = _x_of(scenario, mech, fixings, i, mid) > x_eps
        hi = np.where(on, mid, hi)
        lo = np.where(on, lo, mid)
    return np.where(never, np.nan, hi)


def check_monotone_allocation(scenario: Scenario, mech: MechanismSpec, agent: int, grid: int = 200,
                              n_fixings: int = 50, seed: int | None = None, fixings=None,
                              tol: float = 1e-9) -> MonotonicityReport:
    """Sweep agent ``agent`` (0-based) over a support grid with the others fixed.

    Fixings are sampled from the prior unless given explicitly.
    """
    seed = scenario.seed if seed is None else seed
    check_preconditions(scenario, mech)
    if fixings is None:
        u = uniforms(seed, 0, n_fixings, scenario.n_agents, STREAM_FIXINGS)
        fixings = np.column_stack([np.asarray(d.ppf(u[:, j])) for j, d in enumerate(scenario.dists)])
    fixings = np.atleast_2d(np.asarray(fixings, dtype=float))
    d = scenario.dists[agent]
    zs = np.linspace(d.a, d.b, grid)
    rows = np.repeat(fixings, grid, axis=0)
    x = _x_of(scenario, mech, rows, agent, np.tile(zs, len(fixings))).reshape(len(fixings), grid)
    drops = -np.diff(x, axis=1)
    max_drop = float(max(drops.max(initial=0.0), 0.0))
    thresholds = activation_thresholds(scenario, mech, fixings, agent)
    return MonotonicityReport(agent + 1, max_drop <= tol, max_drop, tuple(float(t) for t in thresholds), fixings)


def random_ama_params(n_agents: int, count: int, seed: int, mu_range=(0.1, 50.0),
                      zeta_range=(0.0, 100.0)) -> list[AmaParams]:
    """Random beta-family parameterizations: mu_1 = 1, other mu log-uniform, zeta uniform."""
    u = uniforms(seed, 0, count, n_agents, STREAM_PARAMS)
    lo, hi = math.log(mu_range[0]), math.log(mu_range[1])
    out = []
    for row in u:
        mu = (1.0, *(math.exp(lo + v * (hi - lo)) for v in row[1:]))
        zeta = zeta_range[0] + row[0] * (zeta_range[1] - zeta_range[0])
        out.append(AmaParams(mu, zeta, "beta"))
    return out


# -- tuning ------------------------------------------------------------------

@dataclass(frozen=True)
class TuneResult:
    params: AmaParams
    estimate: RevenueEstimate
    evaluations: int

    def to_dict(self) -> dict:
        out = self.estimate.to_dict()
        out["evaluations"] = self.evaluations
        return out


def tune(scenario: Scenario, mu_range=(1.0, 50.0), zeta_range=(0.0, 100.0), n_grid: int = 11,
         n_mc: int = 20_000, seed: int | None = None, max_iter: int = 200, xatol: float = 1e-3) -> TuneResult:
    """Search AMA weights mu_2..mu_n and zeta for the highest estimated revenue.

    A coarse grid is scored on one fixed sample of profiles (common random
    numbers), then Nelder-Mead refines from the best grid point. Zeta is
    held fixed when ``zeta_range`` is a single point; zeta = 0 uses the
    deterministic outcome space.
    """
    seed = scenario.seed if seed is None else seed
    mu_lo, mu_hi = map(float, mu_range)
    z_lo, z_hi = map(float, zeta_range)
    if not (0 < mu_lo <= mu_hi) or not (0 <= z_lo <= z_hi) or n_grid < 1 or n_mc < 2:
        raise DomainError("tuning ranges must be non-empty with positive mu and nonnegative zeta")
    n_mu = scenario.n_agents - 1
    tune_zeta = z_hi > z_lo
    space = "det" if z_hi == 0.0 else "beta"
    lows = [mu_lo] * n_mu + ([z_lo] if tune_zeta else [])
    highs = [mu_hi] * n_mu + ([z_hi] if tune_zeta else [])
    thetas = sample_thetas(scenario, 0, n_mc, seed)
    cache: dict[tuple, float] = {}

    def params_of(x) -> AmaParams:
        x = [min(max(v, lo), hi) for v, lo, hi in zip(x, lows, highs)]
        zeta = x[n_mu] if tune_zeta else z_lo
        return AmaParams((1.0, *x[:n_mu]), zeta, space)

    def revenue(x) -> float:
        p = params_of(x)
        key = (p.mu, p.zeta)
        if key not in cache:
            res = batch.ama_batch(scenario.layout, thetas, p.mu, p.zeta, p.randomized)
            cache[key] = math.fsum(res.revenue().tolist()) / n_mc
        return cache[key]

    axes = [np.linspace(lo, hi, n_grid) for lo, hi in zip(lows, highs)]
    best_x = None
    best = -math.inf
    for point in itertools.product(*axes):
        r = revenue(point)
        if r > best:
            best, best_x = r, np.array(point)
    if axes:
        steps = np.array([(hi - lo) / max(n_grid - 1, 1) or 1.0 for lo, hi in zip(lows, highs)])
        simplex = [best_x]
        for k in range(len(axes)):
            v = best_x.copy()
            v[k] = v[k] + steps[k] if v[k] + steps[k] <= highs[k] else v[k] - steps[k]
            simplex.append(v)
        opt = minimize(lambda x: -revenue(x), best_x, method="Nelder-Mead",
                       bounds=list(zip(lows, highs)),
                       options={"initial_simplex": np.array(simplex), "xatol": xatol,
                                "fatol": np.inf, "maxiter": max_iter})
        log.debug("nelder-mead: %s after %d iterations", opt.message, opt.nit)
    # best over everything scored, grid and simplex alike
    key = max(cache, key=cache.get)
    params = AmaParams(key[0], key[1], space)
    mech = MechanismSpec("ama", params)
    res = batch.ama_batch(scenario.layout, thetas, params.mu, params.zeta, params.randomized)
    return TuneResult(params, _summarize(res.revenue(), mech, seed), len(cache))
