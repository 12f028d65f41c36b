import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from onoff_fluid import derive_params, exact_oracle, mc_sim
from onoff_fluid.errors import DomainError, InsufficientCycles, UnstableModel


@pytest.fixture(scope="module")
def small():
    p = derive_params(10, 1.0, 6.5)
    cfg = mc_sim.SimConfig(seed=2024, min_cycles=4000, probes=((0.0, None), (0.5, None), (0.3, 7), (1.0, 8)))
    return p, cfg, mc_sim.simulate(p, cfg)


def test_deterministic(small):
    p, cfg, est = small
    again = mc_sim.simulate(p, cfg)
    assert again.estimates == est.estimates
    assert again.events == est.events


def test_replications_differ(small):
    p, cfg, est = small
    other = mc_sim.simulate(p, mc_sim.SimConfig(seed=cfg.seed, min_cycles=cfg.min_cycles,
                                                probes=cfg.probes, replication=1))
    assert other.estimates != est.estimates


def test_z_marginal_is_binomial(small):
    p, _, est = small
    ref = binom.pmf(np.arange(11), 10, 0.5)
    for j, (v, se) in enumerate(est.z_marginal):
        assert abs(v - ref[j]) < 4 * se + 1e-12


def test_probes_match_oracle(small):
    p, cfg, est = small
    xs = sorted({x for x, _ in cfg.probes})
    tab = exact_oracle.solve_stationary(p, xs)
    for (x, k), (v, se, n) in est.estimates.items():
        ref = tab.marginal(x) if k is None else tab.deficit(x)[k]
        assert n == cfg.min_cycles and se > 0
        assert abs(v - ref) < 4 * se


def test_se_shrinks_like_root_n():
    p = derive_params(10, 1.0, 6.5)
    ses = []
    for n in (1000, 4000):
        est = mc_sim.simulate(p, mc_sim.SimConfig(seed=7, min_cycles=n, probes=((0.5, None),)))
        ses.append(est.estimates[(0.5, None)][1])
    assert ses[0] / ses[1] == pytest.approx(2.0, rel=0.25)


def test_insufficient_cycles():
    p = derive_params(10, 1.0, 6.5)
    with pytest.raises(InsufficientCycles):
        mc_sim.simulate(p, mc_sim.SimConfig(seed=1, min_cycles=10_000, max_events=1000))


def test_unstable_model_rejected():
    # derive_params refuses such inputs, so build one by hand
    bad = dataclasses.replace(derive_params(10, 1.0, 6.5), c=4.5, rho=-0.05)
    with pytest.raises(UnstableModel):
        mc_sim.simulate(bad, mc_sim.SimConfig(seed=1))


@pytest.mark.parametrize("kw", [
    dict(seed=-1), dict(seed=2**64), dict(seed=1, min_cycles=10),
    dict(seed=1, max_events=0), dict(seed=1, probes=((-1.0, None),)),
    dict(seed=1, probes=((1.0, 2.5),)),
])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        mc_sim.SimConfig(**kw)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10), st.floats(0.0, 5.0), st.floats(0.0, 3.0), st.floats(0.0, 5.0))
def test_time_above_against_sampling(k, x0, tau, level):
    c = 6.5
    got = mc_sim.time_above(np.array([k]), np.array([x0]), np.array([tau]), c, level)[0]
    # the buffer is linear on the segment; count a fine grid of midpoints
    n = 20000
    t = (np.arange(n) + 0.5) * tau / n
    ref = np.count_nonzero(x0 + (k - c) * t > level) * tau / n
    assert abs(got - ref) <= 2 * tau / n + 1e-12
