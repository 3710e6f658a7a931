"""Exception hierarchy shared across the package."""


class XmktError(Exception):
    """Base class for all package errors."""


class DomainError(XmktError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModelError(XmktError):
    """A profile or agent is not usable by the requested computation."""


class DistributionError(XmktError, ValueError):
    """A prior distribution is malformed or degenerate."""


class PreconditionError(XmktError):
    """A mechanism's preconditions do not hold (e.g. MHR fails)."""


class ScenarioError(XmktError):
    """A scenario file violates an invariant.

    ``field`` names the offending JSON location and ``rule`` the violated rule.
    """

    def __init__(self, field, rule):
        super().__init__(f"{field}: {rule}")
        self.field = field
        self.rule = rule
