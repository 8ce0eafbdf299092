import numpy as np
import pytest

from pwcorr.grid import Grid
from pwcorr.oscillator import OscillatorParams, StateSpec, build_state, eigenstate, oscillator_potential

SUPERPOSITION = StateSpec.superposition([2**-0.5, 2**-0.5])

# filled by tests/test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params():
    return OscillatorParams()


@pytest.fixture(scope="session")
def grid():
    return Grid(-10.0, 10.0, 1024)


@pytest.fixture(scope="session")
def V(params, grid):
    return oscillator_potential(params, grid)


@pytest.fixture(scope="session")
def ground(params, grid):
    return eigenstate(0, params, grid)


@pytest.fixture(scope="session")
def coherent(params, grid):
    return build_state(StateSpec.coherent(1.0), params, grid)


@pytest.fixture(scope="session")
def superposition(params, grid):
    return build_state(SUPERPOSITION, params, grid)


@pytest.fixture(scope="session")
def T(params):
    return params.period


@pytest.fixture(scope="session")
def dt(T):
    return T / 1000


def sup(a) -> float:
    return float(np.max(np.abs(a)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
