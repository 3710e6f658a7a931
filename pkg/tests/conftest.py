import pytest

from xmkt.distributions import Uniform
from xmkt.model import Agent, Role
from xmkt.sim import Scenario
from xmkt.valuation import PiecewisePolynomial

OFFENDER_C = PiecewisePolynomial.polynomial([1.0, -1.0])
DEFENDER_C = PiecewisePolynomial.constant(1.0)
OFFENDER_PRIOR = Uniform(160.0, 400.0)
DEFENDER_PRIOR = Uniform(0.5, 15.0)


def market(seed=42, n=1_000_000):
    """The two-buyer market used throughout: offender c=1-t, defender c=1."""
    return Scenario(
        (
            Agent(Role.OFFENDER, OFFENDER_C, 300.0, OFFENDER_PRIOR),
            Agent(Role.DEFENDER, DEFENDER_C, 10.0, DEFENDER_PRIOR),
        ),
        seed,
        n,
    )


@pytest.fixture(scope="session")
def scenario():
    return market()


@pytest.fixture
def worked(scenario):
    return scenario.profile([300.0, 10.0])


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
