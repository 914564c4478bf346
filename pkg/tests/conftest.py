import numpy as np
import pytest

from p1tr.curve_family import solve_u
from p1tr.toprec import CorrelatorEvaluator

# a generic point away from the real axis and a point near a Boutroux curve
GENERIC = (-5.0 + 0.3j, 0.3)
QUOTED = (-9.9313 + 1.17017j, 0.5)


@pytest.fixture(scope="session")
def frame():
    return solve_u(*GENERIC)


@pytest.fixture(scope="session")
def evaluator(frame):
    return CorrelatorEvaluator(frame)


@pytest.fixture(scope="session")
def quoted_frame():
    return solve_u(*QUOTED)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def interior_point(rng, lattice, lo=0.1, hi=0.9):
    """Random point of the fundamental cell away from its corners."""
    return complex(rng.uniform(lo, hi) * lattice.omega_A + rng.uniform(lo, hi) * lattice.omega_B)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
