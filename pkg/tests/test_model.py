import math
import warnings

import pytest
from hypothesis import given, settings

from onoff_fluid import derive_params
from onoff_fluid.errors import DomainError, IntegerServiceRate, UnstableModel
from onoff_fluid.model import params_from_gamma

from conftest import stable_params


def test_reference_constants(p100):
    assert p100.gamma == pytest.approx(0.605, rel=1e-15)
    assert p100.alpha == pytest.approx(0.5, rel=1e-15)
    assert p100.rho == pytest.approx(0.21, rel=1e-13)
    # gamma + lam - gamma*lam with lam = 1 is exactly 1
    assert p100.phi == pytest.approx(1.0, rel=1e-14)
    assert p100.u0 == pytest.approx(0.395 / 0.605, rel=1e-14)
    assert p100.floor_c == 60
    assert p100.eps == 0.01


def test_integer_rate_rejected():
    with pytest.raises(IntegerServiceRate):
        derive_params(10, 1.0, 5.0)


def test_unstable_rejected():
    with pytest.raises(UnstableModel):
        derive_params(100, 1.0, 40.5)
    with pytest.raises(UnstableModel):
        derive_params(10, 1.0, 10.5)


@pytest.mark.parametrize("args", [(1, 1.0, 0.5), (10, 0.0, 6.5), (10, -1.0, 6.5),
                                  (10, 1.0, -2.5), (10.5, 1.0, 6.5), (10, math.nan, 6.5)])
def test_invalid_inputs(args):
    with pytest.raises(DomainError):
        derive_params(*args)


def test_near_integer_warns():
    with pytest.warns(RuntimeWarning):
        derive_params(100, 1.0, 60.0005)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        derive_params(100, 1.0, 60.01)


def test_from_gamma_roundtrip():
    p = params_from_gamma(101, 1.0, 0.6)
    assert p.gamma == pytest.approx(0.6, rel=1e-15)


def test_deterministic(p100):
    assert derive_params(100, 1.0, 60.5) == p100


@settings(max_examples=300, deadline=None)
@given(stable_params())
def test_identities_and_ranges(p):
    g, lam = p.gamma, p.lam
    assert p.rho + p.phi == pytest.approx(2 * g, rel=1e-14)
    assert p.phi - p.rho == pytest.approx(2 * lam * (1 - g), rel=1e-13)
    # the difference cancels when rho is small; measure against phi^2
    assert abs(p.phi**2 - p.beta**2 - p.rho**2) <= 1e-13 * p.phi**2
    assert 0 < p.rho < 1 and p.phi > 0 and p.delta > 0
    assert 0 < p.u0 < 1 and 0 < p.alpha < 1 and p.S0 < 0
    assert p.z_star > g
