import numpy as np
import pytest
from hypothesis import settings

from csfsim.model import Grid, PhysConstants, State

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def smooth_state(grid: Grid, b=None, u=None) -> State:
    """Nonsingular initial data with homogeneous u, eta, zeta boundary values."""
    z = grid.z
    return State(
        0.0,
        np.sin(np.pi * z) if u is None else u,
        z * (1 - z) / 5,
        z * (1 - z),
        np.cos(np.pi * z) / 6 if b is None else b,
        2.0 + np.cos(np.pi * z),
    )


@pytest.fixture
def consts():
    return PhysConstants()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.line(RESULTS[n])
