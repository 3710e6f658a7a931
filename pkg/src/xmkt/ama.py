"""VCG and affine maximizer (AMA) mechanisms for the general model.

An AMA picks the outcome maximizing ``sum_i mu_i V_i(alpha) + lambda(alpha)``
and charges each agent the weighted externality she imposes, divided by her
weight. Outcomes are either deterministic disclosure times or members of
the two-parameter beta family with ``lambda = zeta * (1 - beta1) * beta2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import batch
from .errors import DomainError
from .model import Deterministic, MechanismResult, Outcome, Profile, Randomized, total_welfare

SPACES = ("det", "beta")


@dataclass(frozen=True)
class AmaParams:
    """Agent weights ``mu``, adjustment strength ``zeta`` and outcome space.

    The tuner always fixes ``mu[0] = 1``; any positive ``mu`` is accepted
    here so that common rescalings can be exercised.
    """

    mu: tuple[float, ...]
    zeta: float = 0.0
    space: str = "det"

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "zeta", float(self.zeta))
        if not mu or any(not m > 0.0 for m in mu):
            raise DomainError("all mu must be positive")
        if not self.zeta >= 0.0:
            raise DomainError("zeta must be nonnegative")
        if self.space not in SPACES:
            raise DomainError(f"space must be one of {SPACES}, got {self.space!r}")
        if self.space == "det" and self.zeta != 0.0:
            raise DomainError("the adjustment vanishes on deterministic outcomes; use zeta=0")

    @classmethod
    def unit(cls, n: int) -> AmaParams:
        return cls((1.0,) * n, 0.0, "det")

    @classmethod
    def from_dict(cls, data: dict) -> AmaParams:
        return cls(tuple(data["mu"]), data.get("zeta", 0.0), data.get("space", "det"))

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "zeta": self.zeta, "space": self.space}

    @property
    def randomized(self) -> bool:
        return self.space == "beta"

    def normalized(self) -> AmaParams:
        """Equivalent parameters with ``mu[0] = 1``."""
        s = self.mu[0]
        return AmaParams(tuple(m / s for m in self.mu), self.zeta / s, self.space)


def _check(profile: Profile, params: AmaParams):
    if len(params.mu) != len(profile):
        raise DomainError(f"{len(params.mu)} weights for {len(profile)} agents")


def _evaluate(profile: Profile, params: AmaParams, agents=None) -> batch.BatchResult:
    _check(profile, params)
    layout = batch.Layout.build([a.role for a in profile], [a.density for a in profile])
    ones = np.ones((1, len(profile)))
    return batch.ama_batch(layout, ones, params.mu, params.zeta, params.randomized, agents=agents)


def _outcome(params: AmaParams, beta1: float, beta2: float) -> Outcome:
    if params.randomized:
        return Randomized(beta1, beta2)
    return Deterministic(beta2)


def ama_objective(profile: Profile, params: AmaParams, outcome: Outcome) -> float:
    """Weighted welfare plus the adjustment term at ``outcome``."""
    _check(profile, params)
    if not params.randomized and not isinstance(outcome, Deterministic):
        raise DomainError("randomized outcome outside a deterministic outcome space")
    beta1, beta2 = outcome.beta
    return total_welfare(profile, outcome, params.mu) + params.zeta * (1.0 - beta1) * beta2


def ama_outcome(profile: Profile, params: AmaParams) -> Outcome:
    res = _evaluate(profile, params, agents=[])
    return _outcome(params, float(res.beta1[0]), float(res.beta2[0]))


def ama_payment(profile: Profile, params: AmaParams, i: int) -> float:
    """Payment of agent i (0-based)."""
    res = _evaluate(profile, params, agents=[i])
    return float(res.payments[0, i])


def run_ama(profile: Profile, params: AmaParams) -> MechanismResult:
    res = _evaluate(profile, params)
    outcome = _outcome(params, float(res.beta1[0]), float(res.beta2[0]))
    return MechanismResult(
        outcome,
        tuple(float(p) for p in res.payments[0]),
        tuple(float(v) for v in res.x[0]),
    )


def run_vcg(profile: Profile) -> MechanismResult:
    return run_ama(profile, AmaParams.unit(len(profile)))
