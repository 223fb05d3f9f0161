import pytest

from predissoc.experiments import DEFAULT_HS, Session
from predissoc.model import default_model

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def session(model):
    """Shared per-h cache: grids, ground states and resonances."""
    return Session(model)


@pytest.fixture(scope="session")
def hs():
    return DEFAULT_HS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
