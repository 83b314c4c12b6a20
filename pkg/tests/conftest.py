import numpy as np
import pytest

from eqp import FractionalBifunction


@pytest.fixture
def scalar_problem():
    # n=1: A=[2], A1=[1], b=1, b1=0, c=[1], d=1
    return FractionalBifunction([[2.0]], [[1.0]], [1.0], [0.0], [1.0], 1.0)


def linear_reduction(b=(0.0, 0.0)):
    """c=0, d=1, A=A1=I: f(x, y) = <x + b, y - x>."""
    n = len(b)
    return FractionalBifunction(np.eye(n), np.eye(n), np.asarray(b, float), np.zeros(n), np.zeros(n), 1.0)


def random_fractional(rng, n):
    return FractionalBifunction(
        rng.random((n, n)), rng.random((n, n)), rng.random(n), rng.random(n), rng.random(n), float(rng.random())
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
