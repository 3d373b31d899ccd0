import numpy as np
import pytest

from finslerlab.geometric import sample_points
from finslerlab.metric import corpus


@pytest.fixture(scope="session")
def corpus3():
    return corpus(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# radius x2 > 2 keeps the Schwarzschild chart Riemannian; x3 stays off the poles
SCHWARZSCHILD_BOX = (2.5, 3.0)


def points(n, count=3, seed=7, box=(-0.5, 0.5)):
    return sample_points(n, count, seed, box)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
