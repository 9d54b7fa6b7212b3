import pytest

from fracident.fracsim import simulate
from fracident.identify import TRUE_MODEL

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def observations():
    """Noiseless 20 Hz step response of the reference process over 10 s."""
    return simulate(TRUE_MODEL, "step", 0.05, 10.0)


@pytest.fixture(scope="session")
def fine_response():
    """Reference step response at T = 0.001 s over 10 s."""
    return simulate(TRUE_MODEL, "step", 0.001, 10.0)
