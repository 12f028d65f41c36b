"""Model parameters of the N-source on/off fluid buffer.

Each of ``N`` independent sources switches off->on at rate ``lambda`` and
on->off at rate 1.  An on source feeds fluid at unit rate and the buffer
drains at rate ``c``.  All scaled constants used by the ray expansion and
the layer formulas are derived once here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, IntegerServiceRate, UnstableModel

INTEGER_TOL = 1e-12
ALPHA_WARN = 1e-3


@dataclass(frozen=True)
class ModelParams:
    """Raw and derived model constants.

    Attributes
    ----------
    N, lam, c : raw inputs (number of sources, off->on rate, output rate).
    gamma : c/N, the scaled output rate.
    eps : 1/N.
    alpha : fractional part of c.
    rho, phi : gamma - lam + lam*gamma and gamma + lam - gamma*lam.
    beta : 2 sqrt(lam gamma (1-gamma)).
    u0 : lam (1-gamma)/gamma, initial value of exp(Psi_z) on every ray.
    delta, zeta : auxiliary combinations used by the s=S0 ray and Y2.
    S0 : -rho/(gamma (1-gamma)), the ray along which u stays constant.
    """

    N: int
    lam: float
    c: float
    gamma: float
    eps: float
    alpha: float
    floor_c: int
    rho: float
    phi: float
    beta: float
    u0: float
    delta: float
    zeta: float
    S0: float

    @property
    def p_on(self) -> float:
        """Stationary probability that a single source is on."""
        return self.lam / (1.0 + self.lam)

    @property
    def z_star(self) -> float:
        """Asymptote gamma^2/delta of the s=S0 ray."""
        return self.gamma**2 / self.delta

    def as_dict(self) -> dict:
        return {
            "N": self.N, "lambda": self.lam, "c": self.c, "gamma": self.gamma,
            "eps": self.eps, "alpha": self.alpha, "rho": self.rho,
            "phi": self.phi, "beta": self.beta, "u0": self.u0,
            "delta": self.delta, "zeta": self.zeta, "S0": self.S0,
        }


def derive_params(N: int, lam: float, c: float) -> ModelParams:
    """Validate ``(N, lam, c)`` and derive every model constant.

    Raises
    ------
    DomainError
        For N < 2, nonpositive rates or c outside (0, N).
    IntegerServiceRate
        If c is within 1e-12 of an integer.
    UnstableModel
        If gamma = c/N is not in (lam/(lam+1), 1).
    """
    if isinstance(N, bool) or int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    N = int(N)
    lam = float(lam)
    c = float(c)
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"lambda must be positive and finite, got {lam!r}")
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"c must be positive and finite, got {c!r}")
    if c >= N:
        raise UnstableModel(f"c={c} >= N={N}: the buffer never fills")
    if abs(c - round(c)) < INTEGER_TOL:
        raise IntegerServiceRate(f"c={c} is an integer")
    gamma = c / N
    if gamma <= lam / (lam + 1.0):
        raise UnstableModel(
            f"gamma={gamma:.6g} <= lambda/(lambda+1)={lam / (lam + 1):.6g}")
    floor_c = math.floor(c)
    alpha = c - floor_c
    if alpha < ALPHA_WARN or alpha > 1.0 - ALPHA_WARN:
        warnings.warn(f"c={c} is close to an integer (alpha={alpha:.3g}); "
                      "corner-layer formulas lose accuracy", RuntimeWarning,
                      stacklevel=2)
    rho = gamma - lam + lam * gamma
    phi = gamma + lam - gamma * lam
    return ModelParams(
        N=N, lam=lam, c=c, gamma=gamma, eps=1.0 / N, alpha=alpha,
        floor_c=floor_c, rho=rho, phi=phi,
        beta=2.0 * math.sqrt(lam * gamma * (1.0 - gamma)),
        u0=lam * (1.0 - gamma) / gamma,
        delta=(gamma - 1.0) ** 2 * lam + gamma**2,
        zeta=2.0 * lam - gamma + (gamma - 1.0) * lam**2,
        S0=-rho / (gamma * (1.0 - gamma)),
    )


def params_from_gamma(N: int, lam: float, gamma: float) -> ModelParams:
    """Convenience constructor from the scaled rate gamma = c/N."""
    return derive_params(N, lam, gamma * N)
