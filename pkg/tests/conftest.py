import math
import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

from onoff_fluid import derive_params

sys.path.insert(0, str(Path(__file__).parent))


def sweep_params(N: int, lam: float = 1.0):
    """Reference family ``c = 0.605 N + 0.25``; ``N = 100`` uses ``c = 60.5``."""
    return derive_params(N, lam, 60.5 if N == 100 else 0.605 * N + 0.25)


@pytest.fixture(scope="session")
def p100():
    return derive_params(100, 1.0, 60.5)


@pytest.fixture(scope="session")
def p60():
    """``lambda = 1``, ``gamma = 0.6``; the worked examples use it."""
    return derive_params(101, 1.0, 60.6)


@st.composite
def stable_params(draw, N=None):
    """Random stable ``(N, lam, c)`` with ``c`` safely away from integers."""
    n = draw(st.integers(10, 400)) if N is None else N
    lam = draw(st.floats(0.05, 5.0))
    lo = lam / (1.0 + lam)
    g = draw(st.floats(lo + 0.02 * (1 - lo), 1.0 - 0.02 * (1 - lo)))
    c = n * g
    frac = c - math.floor(c)
    if frac < 0.01 or frac > 0.99:
        c = math.floor(c) + 0.5
    if not lo < c / n < 1.0:
        c = n * 0.5 * (lo + 1.0) + 0.37
    return derive_params(n, lam, c)
