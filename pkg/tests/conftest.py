import numpy as np
import pytest

from orliczlab.integration import MeasureSpec, QuadratureConfig
from orliczlab.orlicz import parse_psi

# acceptance lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)


@pytest.fixture
def cfg():
    return QuadratureConfig()


@pytest.fixture
def disc0():
    return MeasureSpec(1, 0.0)


@pytest.fixture
def x2():
    return parse_psi("power:2")


@pytest.fixture
def expm1():
    return parse_psi("exppow:1:1")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
