import numpy as np
import pytest

from spreadpc import returns as R


def synthetic(values, d=5, L=4):
    """Series with hand-chosen r_n (no tail beyond the trailing zeros)."""
    return R.ReturnSeries(d, L, np.asarray(values, dtype=float), "synthetic")


@pytest.fixture
def toy():
    # r_2 = 0.1, r_3 = 0.05, r_4 = 0.02, rest 0
    return synthetic([1, 0, 0.1, 0.05, 0.02, 0, 0, 0, 0])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
