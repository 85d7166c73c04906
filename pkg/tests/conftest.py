import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from riskmnl.distribution import RewardDistribution

# compiled kernels make the first example slow; deadlines would be noise
settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

unit = st.floats(0.0, 1.0, allow_nan=False)
profit = st.floats(0.01, 1.0, allow_nan=False)


@st.composite
def distributions(draw, max_atoms=6):
    k = draw(st.integers(1, max_atoms))
    xs = draw(st.lists(unit, min_size=k, max_size=k))
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))
    w = np.asarray(w) + 1e-3
    return RewardDistribution.from_atoms(zip(xs, (w / w.sum()).tolist()))


@st.composite
def mnl_problems(draw, max_products=6):
    """(v, r) with N <= max_products."""
    n = draw(st.integers(1, max_products))
    v = draw(st.lists(unit, min_size=n, max_size=n))
    r = draw(st.lists(profit, min_size=n, max_size=n))
    return np.array(v), np.array(r)


@pytest.fixture
def three_atoms():
    return RewardDistribution.from_atoms([(0.0, 0.5), (0.4, 0.3), (1.0, 0.2)])


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
