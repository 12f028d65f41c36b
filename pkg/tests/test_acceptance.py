"""End-to-end acceptance run.

Each test checks one criterion at its stated tolerance and runtime budget
and prints a single ``PASS``/``FAIL`` line with the measured numbers.
"""
import math
import time
import warnings

import numpy as np
import pytest
from scipy.stats import binom

from onoff_fluid import derive_params, exact_oracle, expansion, layers, marginal, mc_sim, rays
from onoff_fluid.cli import run as cli_run

import residuals
from conftest import sweep_params
from matching import (ratio_c01_blx0, ratio_c01_blz1, ratio_corner_blx0, ratio_transition_outer,
                      ratio_Y01_blz1)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed, budget):
        ok = ok and elapsed < budget
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f} s / {budget:g} s]")
        return ok
    return emit


def _rel(a, b):
    return abs(a / b - 1.0)


def test_c01_algebraic_identities(report):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    n = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while n < 10_000:
            N = int(rng.integers(2, 1000))
            lam = float(rng.uniform(0.05, 5.0))
            lo = lam / (1 + lam)
            c = N * float(rng.uniform(lo, 1.0))
            if abs(c - round(c)) < 1e-6 or not lo < c / N < 1:
                continue
            p = derive_params(N, lam, c)
            d = rays.ray_derived(p, float(rng.uniform(-5.0, 5.0)))
            g, rho, phi = p.gamma, p.rho, p.phi
            errs = (
                abs(rho + phi - 2 * g) / (2 * g),
                abs(phi - rho - 2 * lam * (1 - g)) / max(phi, abs(rho)),
                abs(phi**2 - p.beta**2 - rho**2) / phi**2,
                abs(d.r1 * d.r2 + lam) / lam,
                abs(d.A1 + d.A2 + d.A3 - g) / max(g, abs(d.A1), abs(d.A2), abs(d.A3)),
                abs(-p.S0 - rho / (g * (1 - g))) / abs(p.S0),
            )
            worst = max(worst, *errs)
            n += 1
    el = time.perf_counter() - t0
    ok = report(1, worst < 1e-13, f"worst relative defect {worst:.2e} over {n} parameter sets", el, 1.0)
    assert ok


def test_c02_eikonal_transport_residuals(report):
    p = derive_params(100, 1.0, 60.5)
    t0 = time.perf_counter()
    res = [residuals.eikonal_transport(p, y, z)
           for grid in (residuals.grid_R(p, 10), residuals.grid_RC(p, 10)) for y, z in grid]
    eik, tr = np.max(res, axis=0)
    el = time.perf_counter() - t0
    ok = report(2, eik < 1e-6 and tr < 1e-4,
                f"eikonal {eik:.2e}, transport {tr:.2e} on {len(res)} points", el, 5.0)
    assert ok


def test_c03_ray_round_trip(report):
    p = derive_params(100, 1.0, 60.5)
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    while n < 100:
        s, t = float(rng.uniform(-5.0, 2.0)), float(rng.uniform(0.01, 3.0))
        y, z = rays.ray_point(p, s, t)
        if not (y > 1e-6 and 1e-6 < z < 1 - 1e-6) or abs(s) < 1e-6:
            continue
        inv = rays.invert_ray(p, (y, z))
        worst = max(worst, _rel(inv.s, s), _rel(inv.t, t))
        n += 1
    el = time.perf_counter() - t0
    ok = report(3, worst < 1e-8, f"worst relative (s, t) error {worst:.2e} over {n} rays", el, 5.0)
    assert ok


def test_c04_boundary_equality(report):
    p = derive_params(100, 1.0, 60.5)
    t0 = time.perf_counter()
    zs = np.linspace(p.gamma + 0.02, 0.98, 20)
    worst = max(abs(expansion.Psi(p, rays.curve_Y0(p, z), z) - expansion.phi_kappa(p, z)[0]) for z in zs)
    el = time.perf_counter() - t0
    ok = report(4, worst < 1e-8, f"max |Psi(Y0,z) - Phi(z)| = {worst:.2e} at 20 points", el, 1.0)
    assert ok


def test_c05_exact_oracle_self_consistency(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for N in (2, 10, 50, 100, 200):
        p = sweep_params(N)
        tab = exact_oracle.solve_stationary(p, [0.0])
        eig = exact_oracle.eigen_residuals(tab).max()
        bc = exact_oracle.bc_residual(tab)
        mass = abs(tab.F_inf.sum() - 1.0)
        count = len(tab.neg_eigvals) == N - p.floor_c
        ok &= eig < 1e-8 and bc < 1e-10 and mass < 1e-12 and count
        parts.append(f"N={N}: eig {eig:.0e} bc {bc:.0e} mass {mass:.0e} count {'ok' if count else 'BAD'}")
    el = time.perf_counter() - t0
    ok = report(5, ok, "; ".join(parts), el, 60.0)
    assert ok


def _probe_errors(N):
    p = sweep_params(N)
    out = {}
    for name, (y, z) in (("R", (0.3, 0.75)), ("RC", (0.01, 0.75))):
        x, k = N * y, int(round(N * z))
        tab = exact_oracle.solve_stationary(p, [x])
        F, _, deficit = layers._outer(p, y, k / N)
        if deficit is not None:
            out[name] = _rel(deficit, tab.deficit(x)[k])
        else:
            out[name] = _rel(F, tab.F[k, 0])
    tab = exact_oracle.solve_stationary(p, [1.0 / N])
    out["corner"] = _rel(layers.corner_spectral(p, 2, 1.0).value, tab.F[p.floor_c + 2, 0])
    tab = exact_oracle.solve_stationary(p)
    out["M(0)"] = _rel(marginal.marginal_small_x(p, 0.0).M, tab.marginal(0.0))
    out["M(N/10)"] = _rel(marginal.marginal_large_x(p, 0.1).M, tab.marginal(N / 10))
    return out


def test_c06_asymptotic_convergence(report):
    t0 = time.perf_counter()
    Ns = (50, 100, 200)
    errs = {N: _probe_errors(N) for N in Ns}
    ok, parts = True, []
    for name in errs[50]:
        e = [errs[N][name] for N in Ns]
        good = e[0] > e[1] > e[2] and e[2] < 0.20
        ok &= good
        parts.append(f"{name} " + "/".join(f"{v:.1%}" for v in e))
    el = time.perf_counter() - t0
    ok = report(6, ok, "; ".join(parts), el, 120.0)
    assert ok


def test_c07_layer_matching(report):
    p = derive_params(100, 1.0, 60.5)
    t0 = time.perf_counter()
    ratios = {
        "transition/outer V=-3": ratio_transition_outer(p, -3.0),
        "transition/outer V=+3": ratio_transition_outer(p, 3.0),
        "corner/bl_x0 l=8 chi=3": ratio_corner_blx0(p),
        "cornerY01/bl_z1 V=-2.5": ratio_Y01_blz1(p),
        "corner01/bl_x0 j=2 x=1": ratio_c01_blx0(p),
        "corner01/bl_z1 j=0 x=1": ratio_c01_blz1(p),
    }
    el = time.perf_counter() - t0
    bad = [k for k, v in ratios.items() if abs(v - 1) > 0.10]
    detail = "; ".join(f"{k} {v:.3f}" for k, v in ratios.items())
    ok = report(7, not bad, f"{detail}; outside 10%: {len(bad)} of 6", el, 30.0)
    assert ok, f"ratios outside 10% at N=100: {bad}"


def test_c08_resummation_and_term_factor(report):
    p = derive_params(100, 1.0, 60.5)
    t0 = time.perf_counter()
    res = max(_rel(*marginal.resummation_check(p, chi)) for chi in (0.0, 0.5, 2.0))
    fac = max(_rel(*marginal.term_factor_identity(p, j)) for j in range(11))
    el = time.perf_counter() - t0
    ok = report(8, res < 1e-10 and fac < 1e-13,
                f"resummation {res:.1e}, per-term factor {fac:.1e} (j<=10)", el, 1.0)
    assert ok


def test_c09_monte_carlo(report):
    p = derive_params(10, 1.0, 6.5)
    xs, ks = (0.25, 0.5, 1.0, 2.0, 4.0), (5, 7, 9)
    probes = ((0.0, None),) + tuple((x, k) for x in xs for k in ks)
    cfg = mc_sim.SimConfig(seed=12345, min_cycles=10_000, probes=probes)
    t0 = time.perf_counter()
    est = mc_sim.simulate(p, cfg)
    again = mc_sim.simulate(p, cfg)
    el = time.perf_counter() - t0
    tab = exact_oracle.solve_stationary(p, sorted({0.0, *xs}))
    zs = [(v - ref) / se for (v, se), ref in zip(est.z_marginal, binom.pmf(range(11), 10, 0.5))]
    for (x, k), (v, se, _) in est.estimates.items():
        ref = tab.marginal(x) if k is None else tab.deficit(x)[k]
        zs.append((v - ref) / se)
    worst = max(abs(z) for z in zs)
    same = again.estimates == est.estimates and again.z_marginal == est.z_marginal
    ok = report(9, worst < 4 and same,
                f"max |z-score| {worst:.2f} over {len(zs)} estimates, {est.cycles} cycles, "
                f"deterministic {same}", el, 120.0)
    assert ok


def test_c10_density_profile_argmax(report, capsys):
    import json

    t0 = time.perf_counter()
    p = derive_params(100, 0.25, 24.89)
    model = ["--N", "100", "--lambda", "0.25", "--c", "24.89", "--format", "json"]

    def profile(*args):
        assert cli_run(["density-profile", *model, *args]) == 0
        return json.loads(capsys.readouterr().out)

    below = profile("--fixed-z", "0.1")
    ok1 = below["meta"]["argmax"] == below["rows"][0]["y"]
    peak = profile("--fixed-z", "0.8")
    ys = [r["y"] for r in peak["rows"]]
    Y0 = rays.curve_Y0(p, 0.8)
    ok2 = abs(peak["meta"]["argmax"] - Y0) <= ys[1] - ys[0]
    fixed_y = profile("--fixed-y", "0.2")
    zs = [r["z"] for r in fixed_y["rows"]]
    ok3 = abs(fixed_y["meta"]["argmax"] - p.gamma) <= zs[1] - zs[0]
    el = time.perf_counter() - t0
    ok = report(10, ok1 and ok2 and ok3,
                f"z=0.1 argmax at smallest y {ok1}; z=0.8 argmax {peak['meta']['argmax']:.4f} vs "
                f"Y0 {Y0:.4f}; y=0.2 argmax {fixed_y['meta']['argmax']:.4f} vs gamma {p.gamma:.4f}",
                el, 10.0)
    assert ok
