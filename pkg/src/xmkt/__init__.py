"""Revenue-maximizing mechanisms for zero-day exploit markets."""

from .ama import AmaParams, ama_objective, ama_outcome, ama_payment, run_ama, run_vcg
from .distributions import Tabulated, Uniform
from .errors import (DistributionError, DomainError, ModelError, PreconditionError, ScenarioError,
                     XmktError)
from .kernels import BACKEND
from .model import (Agent, Deterministic, MechanismResult, Profile, Randomized, Role, total_welfare,
                    value_of_outcome)
from .myerson import allocate, check_mhr, payment, run_myerson, virtual_value
from .valuation import PiecewisePolynomial, argmax_polynomial, evaluate, integrate, scale

__version__ = "0.1.0"
