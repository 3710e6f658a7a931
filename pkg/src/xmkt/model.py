"""Market data model: agents, profiles, outcomes and mechanism results."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Sequence, Union

from .errors import DomainError, ModelError
from .valuation import PiecewisePolynomial, integrate, scale


class Role(enum.Enum):
    OFFENDER = "offender"
    DEFENDER = "defender"

    @property
    def sign(self) -> int:
        """+1 for offenders (prefer late disclosure), -1 for defenders."""
        return 1 if self is Role.OFFENDER else -1


@dataclass(frozen=True)
class Agent:
    """A buyer.

    In the single-parameter model ``weight`` is the public shape c(t) and the
    realized density is ``theta * c(t)``; ``distribution`` is the prior over
    theta. Without theta and distribution, ``weight`` is the density itself.
    """

    role: Role
    weight: PiecewisePolynomial
    theta: float | None = None
    distribution: Any = None

    def __post_init__(self):
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role(self.role))
        if self.theta is not None:
            theta = float(self.theta)
            if not theta >= 0.0:
                raise DomainError(f"theta={self.theta} must be nonnegative")
            object.__setattr__(self, "theta", theta)

    @property
    def single_parameter(self) -> bool:
        return self.theta is not None or self.distribution is not None

    @cached_property
    def density(self) -> PiecewisePolynomial:
        if self.theta is None:
            if self.distribution is not None:
                raise ModelError("agent has a prior but no realized theta")
            return self.weight
        return scale(self.weight, self.theta)

    def with_theta(self, theta: float) -> Agent:
        return replace(self, theta=theta)


@dataclass(frozen=True)
class Profile:
    """An ordered tuple of agents with resolved densities."""

    agents: tuple[Agent, ...]

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        if not agents:
            raise ModelError("a profile needs at least one agent")
        for i, a in enumerate(agents):
            if a.distribution is not None and a.theta is None:
                raise ModelError(f"agent {i + 1} has no realized theta")

    def __len__(self) -> int:
        return len(self.agents)

    def __iter__(self):
        return iter(self.agents)

    def __getitem__(self, i: int) -> Agent:
        return self.agents[i]

    @property
    def thetas(self) -> tuple[float | None, ...]:
        return tuple(a.theta for a in self.agents)

    def with_report(self, i: int, theta: float) -> Profile:
        agents = list(self.agents)
        agents[i] = agents[i].with_theta(theta)
        return Profile(tuple(agents))

    def with_density(self, i: int, density: PiecewisePolynomial) -> Profile:
        """Replace agent i by a general-model agent reporting ``density``."""
        agents = list(self.agents)
        agents[i] = Agent(agents[i].role, density)
        return Profile(tuple(agents))


@dataclass(frozen=True)
class Deterministic:
    """The exploit is alive on [0, t_end] and dead afterwards."""

    t_end: float

    def __post_init__(self):
        if not 0.0 <= self.t_end <= 1.0:
            raise DomainError(f"t_end={self.t_end} outside [0, 1]")

    @property
    def beta(self) -> tuple[float, float]:
        return 1.0, self.t_end

    def to_dict(self) -> dict:
        return {"type": "deterministic", "t_end": self.t_end}


@dataclass(frozen=True)
class Randomized:
    """Survival probability ``beta1`` on [0, beta2] and zero afterwards."""

    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name}={getattr(self, name)} outside [0, 1]")

    @property
    def beta(self) -> tuple[float, float]:
        return self.beta1, self.beta2

    def alive(self, t: float) -> float:
        return self.beta1 if t <= self.beta2 else 0.0

    def to_dict(self) -> dict:
        return {"type": "randomized", "beta1": self.beta1, "beta2": self.beta2}


Outcome = Union[Deterministic, Randomized]


@dataclass(frozen=True)
class MechanismResult:
    outcome: Outcome
    payments: tuple[float, ...]
    valuations: tuple[float, ...]
    utilities: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.utilities:
            object.__setattr__(
                self, "utilities", tuple(v - p for v, p in zip(self.valuations, self.payments))
            )

    @property
    def revenue(self) -> float:
        return sum(self.payments)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.to_dict(),
            "agents": [
                {"agent": i + 1, "payment": p, "valuation": v, "utility": u}
                for i, (p, v, u) in enumerate(zip(self.payments, self.valuations, self.utilities))
            ],
            "revenue": self.revenue,
        }


def value_of_outcome(agent: Agent, outcome: Outcome) -> float:
    """Valuation of ``agent`` for an outcome in the beta family.

    Offenders value the expected live mass ``beta1 * int_0^beta2 v``;
    defenders value the complement ``int_0^1 v - beta1 * int_0^beta2 v``.
    """
    beta1, beta2 = outcome.beta
    v = agent.density
    live = beta1 * integrate(v, 0.0, beta2)
    if agent.role is Role.OFFENDER:
        return live
    return integrate(v, 0.0, 1.0) - live


def total_welfare(profile: Profile, outcome: Outcome, weights: Sequence[float]) -> float:
    """Weighted sum of agent valuations at ``outcome``."""
    if len(weights) != len(profile):
        raise DomainError("one weight per agent required")
    if any(not w > 0 for w in weights):
        raise DomainError("weights must be positive")
    return sum(w * value_of_outcome(a, outcome) for w, a in zip(weights, profile))
