"""Overflow probability ``M(x) = Pr[X > x]`` in its two asymptotic regimes.

* ``x = O(1/N)`` (``chi = N x``): a positive series obtained by summing the
  corner-layer expansion over all sources.
* ``x = O(N)`` (``y = x/N``): a saddle point on ``z = gamma`` of the outer
  expansion, carried by the returning ray through ``(y, gamma)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from . import expansion, layers, rays
from .errors import DomainError, NumericalError, TruncationNotConverged
from .model import ModelParams
from .specfun import bessel_j_signed

SMALL_X_MAX = 10.0
LARGE_X_MIN = 20.0
SERIES_START = 1024
SERIES_MAX_TERMS = 2**18
SERIES_RTOL = 1e-16


@dataclass(frozen=True)
class MarginalResult:
    """One value of ``M``.

    ``x`` is the argument the regime works in: ``chi`` for ``SmallX``, ``y``
    for ``LargeX``.
    """

    x: float
    log_M: float
    regime: str
    s_saddle: float | None = None
    terms_used: int | None = None

    def __post_init__(self):
        if self.regime not in ("SmallX", "LargeX"):
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def M(self) -> float:
        return math.exp(self.log_M)


def decay_rate(p: ModelParams) -> float:
    """``f = -ln u0 - 2 rho/phi``; series terms fall off like ``exp(-f m)``."""
    return -math.log(p.u0) - 2.0 * p.rho / p.phi


def _log_small_x_terms(p: ModelParams, chi: float, J: int) -> np.ndarray:
    j = np.arange(J, dtype=float)
    m = j + 1.0 - p.alpha
    return (j * np.log(m) - gammaln(j + 1.0) - p.phi * chi / m
            + (2.0 * p.rho / p.phi - 1.0) * m + m * math.log(p.u0))


def small_x_terms(p: ModelParams, chi: float, J: int) -> np.ndarray:
    """First ``J`` summands of the small-``x`` series (not truncation-checked)."""
    return np.exp(layers.log_corner_scale(p) + _log_small_x_terms(p, chi, J))


def marginal_small_x(p: ModelParams, chi: float, *, rtol: float = SERIES_RTOL,
                     max_terms: int = SERIES_MAX_TERMS) -> MarginalResult:
    """``M`` at ``x = chi/N`` from the summed corner series.

    ``M = C sum_j m^j/j! exp(-phi chi/m) exp((2 rho/phi - 1) m) u0^m`` with
    ``m = j + 1 - alpha`` and ``C`` the corner scale.  All terms are
    positive.  The term count doubles until the tail (bounded by a
    geometric series of ratio ``exp(-f)``) is below ``rtol`` of the sum.

    Raises
    ------
    TruncationNotConverged
        If ``max_terms`` is not enough, which happens as ``rho -> 0``.
    """
    if not chi >= 0.0:
        raise DomainError(f"chi must be nonnegative, got {chi}")
    f = decay_rate(p)
    if not f > 0.0:
        raise NumericalError(f"series does not decay (f={f:.3e})")
    J = SERIES_START
    while True:
        lt = _log_small_x_terms(p, chi, J)
        total = logsumexp(lt)
        # tail beyond J is at most last / (1 - e^{-f}) up to the slowly
        # varying m^j/j! envelope, which is already past its peak here
        tail = lt[-1] - math.log(-math.expm1(-f))
        peak_passed = lt[-1] < lt[-2]
        if peak_passed and tail - total < math.log(rtol):
            break
        if J >= max_terms:
            raise TruncationNotConverged(
                f"small-x series not converged after {J} terms (f={f:.3e})")
        J = min(2 * J, max_terms)
    log_M = layers.log_corner_scale(p) + total
    if not log_M < 0.0:
        raise NumericalError(f"small-x series gives M={math.exp(log_M):.3e} >= 1")
    return MarginalResult(x=chi, log_M=log_M, regime="SmallX", terms_used=J)


def s_of_y_gamma(p: ModelParams, y: float) -> float:
    """The ``s < S0`` whose returning ray meets ``z = gamma`` at height ``y``."""
    return rays.invert_on_gamma(p, y)


def psi_on_gamma(p: ModelParams, s: float) -> tuple[float, float, float]:
    """``(y, Tgamma, psi)`` of returning ray ``s`` at ``z = gamma``, closed form."""
    T = rays.t_gamma(p, s)
    y = rays.y_at_t_gamma(p, s)
    g = p.gamma
    psi = (s * y - math.log1p(p.lam) + 0.5 * ((2.0 * g - 1.0) * s - (p.lam + 1.0)) * T
           + 0.5 * math.log(p.lam * s / (p.rho + s * g * (1.0 - g))))
    return y, T, psi


def y_s_on_gamma(p: ModelParams, s: float, *, total: bool = False) -> float:
    """``dy/ds`` on ``z = gamma`` by central differences.

    By default ``t`` is held at ``Tgamma(s)``.  ``total=True`` differentiates
    ``y(s, Tgamma(s))`` instead; the two agree because ``y_t = z - gamma``
    vanishes there.
    """
    h = expansion.fd_step(s, p.S0)
    if total:
        return (rays.y_at_t_gamma(p, s + h) - rays.y_at_t_gamma(p, s - h)) / (2.0 * h)
    T = rays.t_gamma(p, s)
    return (rays.ray_point(p, s + h, T)[0] - rays.ray_point(p, s - h, T)[0]) / (2.0 * h)


def marginal_large_x(p: ModelParams, y: float, *, total_derivative: bool = False) -> MarginalResult:
    """``M`` at ``x = N y`` by a saddle point at ``z = gamma``.

    ``M = -sqrt(eps/(2 pi)) / S * sqrt(-S0 / (y_s (S0 - S))) exp(psi/eps)``
    where ``S = s(y)`` is the returning ray through ``(y, gamma)``.
    """
    if not y > 0.0:
        raise DomainError(f"y must be positive, got {y}")
    s = s_of_y_gamma(p, y)
    _, _, psi = psi_on_gamma(p, s)
    ys = y_s_on_gamma(p, s, total=total_derivative)
    if not ys > 0.0:
        raise NumericalError(f"y_s={ys:.3e} is not positive at s={s}")
    log_pref = (0.5 * math.log(p.eps / (2.0 * math.pi)) - math.log(-s)
                + 0.5 * math.log(-p.S0 / (ys * (p.S0 - s))))
    return MarginalResult(x=y, log_M=log_pref + psi / p.eps, regime="LargeX", s_saddle=s)


def marginal(p: ModelParams, x: float) -> list[MarginalResult]:
    """Route buffer level ``x`` (unscaled) to the applicable regime(s).

    ``chi = N x`` below 10 uses the small-x series, above 20 the saddle
    point; in between both are returned, small-x first.
    """
    if not x >= 0.0:
        raise DomainError(f"x must be nonnegative, got {x}")
    chi = p.N * x
    out = []
    if chi <= LARGE_X_MIN:
        out.append(marginal_small_x(p, chi))
    if chi >= SMALL_X_MAX:
        out.append(marginal_large_x(p, x / p.N))
    return out


# consistency identities -------------------------------------------------

def resummation_check(p: ModelParams, chi: float, J: int = 40, L: int | None = None) -> tuple[float, float]:
    """Both sides of the identity linking the corner series to ``M``.

    Returns ``(lhs, rhs)`` where ``lhs = -sum_l sum_{j<J} (sqrt u0)^l a_j
    exp(theta_j chi) J_{l-1-j}(-beta m/phi)`` summed over integers
    ``|l| <= L`` (i.e. ``sum_l (F_l(inf) - F_l(chi))`` for the truncated
    corner expansion) and ``rhs`` is the ``J``-term small-x series.  The
    Bessel generating function makes them equal term by term.
    """
    if L is None:
        xmax = p.beta * (J - p.alpha) / p.phi
        L = int(xmax + J + 80)
    tab = layers.corner_coefficients(p, J)
    j = np.arange(J)
    m = j + 1.0 - p.alpha
    ls = np.arange(-L, L + 1)
    order = ls[:, None] - 1 - j[None, :]
    lj, sj = bessel_j_signed(order, np.broadcast_to(-p.beta * m / p.phi, order.shape))
    ref = layers.log_corner_scale(p)
    logt = (tab.log_a - ref)[None, :] + tab.theta[None, :] * chi + lj + 0.5 * ls[:, None] * math.log(p.u0)
    lhs = -math.fsum((tab.sign_a[None, :] * sj * np.exp(logt)).ravel())
    rhs = math.fsum(np.exp(_log_small_x_terms(p, chi, J)))
    return lhs, rhs


def residue_terms(p: ModelParams, J: int) -> np.ndarray:
    """Small-x summands at ``chi = 0`` rebuilt from the corner transform.

    Term ``j`` is ``-(-1)^j/j! / m * exp(rho m/phi + Upsilon(theta_j)) (sqrt u0)^m``
    in units of the corner scale; complex arithmetic with the principal
    logarithm, so positivity of the real result is a genuine check on the
    sign bookkeeping.
    """
    out = np.empty(J, dtype=complex)
    hl = 0.5 * math.log(p.u0)
    for j in range(J):
        m = j + 1.0 - p.alpha
        ups = layers.upsilon(p, -p.phi / m)
        out[j] = (-(-1.0) ** j / math.factorial(j) / m
                  * np.exp(p.rho * m / p.phi + ups + m * hl))
    return out


def morrison_map(p: ModelParams) -> dict[str, float]:
    """The notation of the classical on-off fluid analysis in terms of ``p``."""
    return {
        "mu": 1.0 - p.alpha,
        "r": p.rho / (p.gamma * (1.0 - p.gamma)),
        "kappa": -expansion.phi_kappa(p, p.gamma)[0],
        "f": decay_rate(p),
    }


def term_factor_identity(p: ModelParams, j: int) -> tuple[float, float]:
    """``u0^m exp((2 rho/phi - 1) m)`` and ``exp(-(f + 1) m)`` for ``m = j+1-alpha``."""
    m = j + 1.0 - p.alpha
    lhs = p.u0**m * math.exp((2.0 * p.rho / p.phi - 1.0) * m)
    rhs = math.exp(-(decay_rate(p) + 1.0) * m)
    return lhs, rhs
