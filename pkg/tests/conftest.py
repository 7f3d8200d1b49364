import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def t8():
    """2x2x2 tensor with t(i,j,k) = 4(i-1) + 2(j-1) + k, values 1..8."""
    return np.arange(1, 9, dtype=float).reshape(2, 2, 2)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
