"""Event-driven simulation of the buffer fed by on-off sources.

Between changes of the number of active sources ``Z`` the buffer moves
linearly at rate ``Z - c`` and sticks at zero, so every quantity of interest
is computed from closed-form segment arithmetic; nothing is time-stepped.

Confidence intervals use regeneration: the process restarts whenever the
buffer empties with ``Z`` equal to the value it had at the first emptying.
Each time-average is a ratio of cycle sums, and its standard error comes
from the usual ratio-estimator variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientCycles, UnstableModel
from .model import ModelParams

MIN_CYCLES = 100
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``probes`` holds ``(x, k)`` pairs for ``Pr[X > x, Z = k]``; ``k = None``
    asks for the marginal ``Pr[X > x]``.  ``replication`` selects an
    independent stream for the same ``seed``.
    """

    seed: int
    min_cycles: int = 10_000
    max_events: int = 50_000_000
    probes: tuple = ()
    replication: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.min_cycles < MIN_CYCLES:
            raise DomainError(f"min_cycles must be at least {MIN_CYCLES}")
        if self.max_events <= 0:
            raise DomainError("max_events must be positive")
        for pr in self.probes:
            x, k = pr
            if not x >= 0:
                raise DomainError(f"probe level must be nonnegative, got {x}")
            if k is not None and int(k) != k:
                raise DomainError(f"probe state must be an integer, got {k}")


@dataclass(frozen=True)
class SimEstimate:
    estimates: dict
    z_marginal: list
    cycles: int
    events: int
    regeneration_state: int
    total_time: float = field(default=0.0)


def _rng(cfg: SimConfig) -> np.random.Generator:
    ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(int(cfg.replication),))
    return np.random.Generator(np.random.PCG64(ss))


def _run_segments(p: ModelParams, cfg: SimConfig):
    """Simulate and return per-segment arrays ``(k, x0, tau, cycle)``.

    Segments before the first regeneration are dropped.
    """
    N, lam, c = p.N, p.lam, p.c
    rng = _rng(cfg)
    ks, x0s, taus, cyc = [], [], [], []
    k, x = 0, 0.0
    k_reg = None
    cycle = -1
    events = 0
    exps = rng.standard_exponential(_CHUNK)
    unif = rng.random(_CHUNK)
    ptr = 0
    while True:
        if events >= cfg.max_events:
            raise InsufficientCycles(
                f"only {max(cycle, 0)} of {cfg.min_cycles} cycles after {events} events")
        if ptr == _CHUNK:
            exps = rng.standard_exponential(_CHUNK)
            unif = rng.random(_CHUNK)
            ptr = 0
        up = lam * (N - k)
        rate = up + k
        tau = exps[ptr] / rate
        go_up = unif[ptr] * rate < up
        ptr += 1
        events += 1
        r = k - c
        x_end = x + r * tau
        if x > 0.0 and x_end <= 0.0:
            # buffer empties inside the segment: split at the hitting time
            t_hit = x / -r
            if cycle >= 0:
                ks.append(k); x0s.append(x); taus.append(t_hit); cyc.append(cycle)
            if k_reg is None:
                k_reg = k
                cycle = 0
            elif k == k_reg:
                cycle += 1
                if cycle == cfg.min_cycles:
                    break
            if cycle >= 0:
                ks.append(k); x0s.append(0.0); taus.append(tau - t_hit); cyc.append(cycle)
            x_end = 0.0
        else:
            x_end = max(x_end, 0.0)
            if cycle >= 0:
                ks.append(k); x0s.append(x); taus.append(tau); cyc.append(cycle)
        assert x_end >= 0.0
        x = x_end
        k = k + 1 if go_up else k - 1
    return (np.asarray(ks, dtype=np.int64), np.asarray(x0s), np.asarray(taus),
            np.asarray(cyc, dtype=np.int64), events, k_reg)


def time_above(k: np.ndarray, x0: np.ndarray, tau: np.ndarray, c: float, level: float) -> np.ndarray:
    """Time each linear segment spends with the buffer strictly above ``level``."""
    r = k - c
    out = np.zeros_like(tau)
    pos = r > 0
    above = x0 > level
    # rising: above from the crossing time on
    t_cross = np.where(pos, (level - x0) / np.where(pos, r, 1.0), 0.0)
    out = np.where(pos & above, tau, out)
    out = np.where(pos & ~above, np.clip(tau - t_cross, 0.0, None), out)
    # falling: above until the crossing time
    t_down = np.where(~pos, (x0 - level) / np.where(~pos, -r, 1.0), 0.0)
    out = np.where(~pos & above, np.minimum(tau, t_down), out)
    return out


def _ratio(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    n = num.size
    est = num.sum() / den.sum()
    resid = num - est * den
    se = math.sqrt(float(np.sum(resid**2)) / (n - 1)) / (den.mean() * math.sqrt(n))
    return float(est), se


def simulate(p: ModelParams, cfg: SimConfig) -> SimEstimate:
    """Estimate ``Pr[X > x, Z = k]``, ``Pr[X > x]`` and ``Pr[Z = k]``.

    Returns values with regenerative standard errors.  Deterministic for a
    given ``(seed, replication)``.

    Raises
    ------
    InsufficientCycles
        If ``max_events`` runs out before ``min_cycles`` cycles complete.
    """
    if not p.rho > 0:
        raise UnstableModel("simulation needs a stable model")
    k, x0, tau, cyc, events, k_reg = _run_segments(p, cfg)
    n = cfg.min_cycles
    cyc_len = np.bincount(cyc, weights=tau, minlength=n)
    est = {}
    for level, kk in cfg.probes:
        mask = np.ones(k.size, dtype=bool) if kk is None else (k == int(kk))
        t = time_above(k[mask], x0[mask], tau[mask], p.c, float(level))
        per = np.bincount(cyc[mask], weights=t, minlength=n)
        v, se = _ratio(per, cyc_len)
        est[(float(level), None if kk is None else int(kk))] = (v, se, n)
    zm = []
    for j in range(p.N + 1):
        per = np.bincount(cyc[k == j], weights=tau[k == j], minlength=n)
        zm.append(_ratio(per, cyc_len))
    return SimEstimate(estimates=est, z_marginal=zm, cycles=n, events=events,
                       regeneration_state=int(k_reg), total_time=float(cyc_len.sum()))
