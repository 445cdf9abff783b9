import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from yamabe_lab.ground_state import ProblemDims, solve_radial_ground_state
from yamabe_lab.moments import alpha_beta, compute_moments

settings.register_profile(
    "lab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def soliton():
    """1-D ground states keyed by exponent."""
    return {q: solve_radial_ground_state(1, q) for q in (3, 4, 6)}


@pytest.fixture(scope="session")
def prof22():
    return solve_radial_ground_state(2, 4.0, dims=ProblemDims(2, 2))


@pytest.fixture(scope="session")
def moments22(prof22):
    return compute_moments(prof22, ProblemDims(2, 2))


@pytest.fixture(scope="session")
def ab22(moments22):
    return alpha_beta(moments22, ProblemDims(2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
