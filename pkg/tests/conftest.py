import numpy as np
import pytest

from fragstoch.paths import Seed


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def seed():
    return Seed(1234, 0)


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
