"""Boundary, corner and transition layer approximations.

The outer ray expansion fails near the corner ``(x, k) = (0, c)``, on the
curve ``y = Y0(z)``, on the edges ``z = 0`` and ``z = 1`` and along the
boundary ``x = 0``.  Each failure has its own local approximation here.
Every function returns a :class:`LayerValue` holding ``log|value|`` and
the sign, since most of these quantities are far below double range for a
few hundred sources.

Scales: ``x`` is the buffer content, ``y = x/N``, ``z = k/N``.  The corner
variables are ``l = k - floor(c)`` and ``chi = N x``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_ndtr

from . import expansion, rays
from .errors import (DomainError, NumericalError, QuadratureNotConverged,
                     TruncationNotConverged)
from .model import ModelParams
from .specfun import bessel_j_signed, log_gamma

LAYER_TAGS = ("Corner0g", "Transition", "Z0", "Z1", "CornerY01", "BLx0", "Corner01", "TailZ1")

SPECTRAL_RTOL = 1e-14
SPECTRAL_MAX_TERMS = 32768
_SPECTRAL_START = 1024

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LayerValue:
    """Signed value stored as ``sign * exp(log_magnitude)``."""

    log_magnitude: float
    sign: int
    layer: str

    def __post_init__(self):
        if self.layer not in LAYER_TAGS:
            raise ValueError(f"unknown layer tag {self.layer!r}")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +-1")
        if math.isnan(self.log_magnitude) or self.log_magnitude == math.inf:
            raise NumericalError(f"{self.layer}: non-finite log magnitude")

    @property
    def value(self) -> float:
        return self.sign * math.exp(self.log_magnitude)


def _from_float(v: float, layer: str) -> LayerValue:
    if v == 0.0:
        return LayerValue(-math.inf, 1, layer)
    return LayerValue(math.log(abs(v)), 1 if v > 0 else -1, layer)


def _log_binom_weight(p: ModelParams, k: int) -> float:
    """Log of the exact stationary weight ``C(N,k) p^k (1-p)^(N-k)``."""
    N = p.N
    return (gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
            + k * math.log(p.lam) - N * math.log1p(p.lam))


def _check_small_int(v, name: str) -> int:
    if isinstance(v, bool) or int(v) != v or v < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")
    return int(v)


# corner (0, gamma): spectral series ---------------------------------------

@dataclass(frozen=True)
class CornerSpectral:
    """Eigenvalues and coefficients of the corner spectral series.

    ``a_j = sign_a[j] * exp(log_a[j])``.  Every ``a_j`` is negative: the
    residue of ``Gamma`` contributes ``(-1)^j`` and ``exp(Upsilon(theta_j))``
    contributes ``(-1)^(j+1)``.
    """

    theta: np.ndarray
    log_a: np.ndarray
    sign_a: np.ndarray
    J: int
    eps_used: float

    @property
    def a(self) -> np.ndarray:
        return self.sign_a * np.exp(self.log_a)


def log_corner_scale(p: ModelParams) -> float:
    """``log(sqrt(eps) sqrt(rho/phi) kappa(gamma) exp(Phi(gamma)/eps))``."""
    Phi, kappa = expansion.phi_kappa(p, p.gamma)
    return 0.5 * math.log(p.eps) + 0.5 * math.log(p.rho / p.phi) + math.log(kappa) + Phi / p.eps


def theta_j(p: ModelParams, j) -> np.ndarray:
    """Corner eigenvalues ``-phi/(j+1-alpha)``."""
    return -p.phi / (np.asarray(j, dtype=float) + 1.0 - p.alpha)


def upsilon(p: ModelParams, theta: complex) -> complex:
    """Exponent ``Upsilon`` of the corner transform, principal logarithm."""
    theta = complex(theta)
    return ((p.phi / theta - p.alpha) * np.log(theta / p.phi)
            + 2.0 * p.lam * (1.0 - p.gamma) / theta - p.phi / (2.0 * theta) * math.log(p.u0))


def residue_gamma(p: ModelParams, j: int) -> float:
    """Residue of ``Gamma(phi/theta + 1 - alpha)`` at ``theta = theta_j``."""
    m = j + 1.0 - p.alpha
    return -p.phi / m**2 * (-1.0) ** j / math.factorial(j)


@functools.lru_cache(maxsize=64)
def corner_coefficients(p: ModelParams, J: int) -> CornerSpectral:
    """First ``J`` eigenvalues and coefficients of the corner series."""
    j = np.arange(J, dtype=float)
    m = j + 1.0 - p.alpha
    half_log_u0 = 0.5 * math.log(p.u0)
    log_a = (log_corner_scale(p) - p.alpha * half_log_u0 + j * np.log(m) - gammaln(j + 1.0)
             - 2.0 * p.lam * (1.0 - p.gamma) * m / p.phi + m * half_log_u0)
    return CornerSpectral(theta=-p.phi / m, log_a=log_a, sign_a=-np.ones(J), J=J, eps_used=p.eps)


@functools.lru_cache(maxsize=256)
def _corner_terms(p: ModelParams, l: int, J: int) -> tuple[np.ndarray, np.ndarray]:
    """``log|.|`` and sign of ``(sqrt u0)^l a_j J_{l-1-j}(-beta m/phi)``."""
    tab = corner_coefficients(p, J)
    j = np.arange(J)
    m = j + 1.0 - p.alpha
    lj, sj = bessel_j_signed(l - 1 - j, -p.beta * m / p.phi)
    return tab.log_a + lj + 0.5 * l * math.log(p.u0), tab.sign_a * sj


def log_corner_F_inf(p: ModelParams, l: int) -> float:
    """``log F_l(inf) = log(sqrt(eps) u0^(l-alpha) kappa(gamma) e^{Phi(gamma)/eps})``."""
    Phi, kappa = expansion.phi_kappa(p, p.gamma)
    return 0.5 * math.log(p.eps) + (l - p.alpha) * math.log(p.u0) + math.log(kappa) + Phi / p.eps


def _check_l(p: ModelParams, l) -> int:
    if isinstance(l, bool) or int(l) != l:
        raise DomainError(f"l must be an integer, got {l!r}")
    l = int(l)
    if not -p.floor_c <= l <= p.N - p.floor_c:
        raise DomainError(f"l={l} outside [{-p.floor_c}, {p.N - p.floor_c}]")
    return l


def corner_series(p: ModelParams, l: int, chi: float, *, rtol: float = SPECTRAL_RTOL,
                  max_terms: int = SPECTRAL_MAX_TERMS) -> tuple[float, float, int]:
    """Spectral sum of the corner layer.

    Returns ``(F_inf, S, J)`` with ``F_l(chi) = F_inf + S`` in units of
    ``exp(log_corner_F_inf)``, i.e. ``F_inf = 1``; ``J`` is the number of
    terms used.  Truncation stops once the last three terms are each below
    ``rtol`` times the partial sum; the term count doubles until then.
    """
    l = _check_l(p, l)
    if not chi >= 0.0:
        raise DomainError(f"chi must be nonnegative, got {chi}")
    ref = log_corner_F_inf(p, l)
    J = _SPECTRAL_START
    while True:
        lt, st = _corner_terms(p, l, J)
        theta = -p.phi / (np.arange(J) + 1.0 - p.alpha)
        terms = st * np.exp(lt + theta * chi - ref)
        S = math.fsum(terms)
        tail = np.abs(terms[-3:])
        if np.all(tail < rtol * max(abs(S), 1e-300)):
            return 1.0, S, J
        if J >= max_terms:
            raise TruncationNotConverged(
                f"corner series for l={l}, chi={chi} not converged after {J} terms")
        J = min(2 * J, max_terms)


def corner_spectral(p: ModelParams, l: int, chi: float, **kw) -> LayerValue:
    """Corner layer ``F_l(chi)`` from the spectral series.

    ``F_l(chi) = F_l(inf) + (sqrt u0)^l sum_j a_j e^{theta_j chi}
    J_{l-1-j}(-(beta/phi)(j+1-alpha))``, with ``chi = N x`` and
    ``l = k - floor(c)``.  Keyword arguments go to :func:`corner_series`.
    """
    one, S, _ = corner_series(p, l, chi, **kw)
    v = one + S
    ref = log_corner_F_inf(p, l)
    if v == 0.0:
        return LayerValue(-math.inf, 1, "Corner0g")
    return LayerValue(ref + math.log(abs(v)), 1 if v > 0 else -1, "Corner0g")


# corner (0, gamma): Bromwich integral ---------------------------------------

def _bromwich_kernel(p: ModelParams, l: int, th: np.ndarray) -> np.ndarray:
    """``theta^{-(l+1)} (beta/2)^{l-alpha} phi^alpha e^{E/theta} sum_k ...``.

    The sum is ``Gamma(q) J_nu(beta/theta)`` with the power prefactor removed,
    ``q = phi/theta + 1 - alpha``, ``nu = q + l - 1``, written as a series in
    ``(beta/2 theta)^2`` with Pochhammer denominators ``(q)_{l+k}``.
    """
    q = p.phi / th + 1.0 - p.alpha

    def inv_poch(n):
        # 1/(q)_n; for n < 0 this is the polynomial prod_{i=1}^{-n} (q - i)
        out = np.ones_like(th)
        if n >= 0:
            for i in range(n):
                out = out / (q + i)
        else:
            for i in range(1, -n + 1):
                out = out * (q - i)
        return out

    mw2 = -(p.beta / (2.0 * th)) ** 2
    power = np.ones_like(th)
    total = inv_poch(l)
    ip = total
    for k in range(1, 100000):
        power = power * mw2 / k
        n = l + k
        # the ratio (q)_{n-1}/(q)_n may be 0/0 for negative n, so rebuild there
        ip = inv_poch(n) if n <= 0 else ip / (q + n - 1)
        term = power * ip
        total = total + term
        if k > 4 and n > 0 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise QuadratureNotConverged("Bessel series in the corner transform did not converge")
    E = p.phi * math.log(p.gamma / p.phi) + 2.0 * p.lam * (1.0 - p.gamma)
    return (th ** (-(l + 1)) * np.exp(E / th) * total
            * (p.beta / 2.0) ** (l - p.alpha) * p.phi ** p.alpha)


def corner_bromwich(p: ModelParams, l: int, chi: float, *, sigma: float | None = None,
                    h: float | None = None, tol: float = 1e-12) -> LayerValue:
    """Corner layer ``F_l(chi)`` by numerical inversion of its Laplace transform.

    The Bromwich contour is deformed to the parabola
    ``theta = sigma - tau^2/(2 sigma) + i tau``, which crosses the real axis
    only at ``sigma > 0`` and leaves every pole (``0`` and ``theta_j < 0``)
    to its left; ``e^{chi theta}`` then decays like a Gaussian in ``tau``.
    The trapezoid rule is refined by halving ``h`` until two successive
    estimates agree to ``tol``.

    The default ``sigma = min(1, 2/chi)`` keeps ``e^{chi sigma}`` moderate;
    the default step is ``0.05 min(1, sigma)``.

    Raises
    ------
    QuadratureNotConverged
        If refinement stalls, or if the integral cancels so strongly
        (large ``chi sigma``, very negative ``l``, ``chi -> 0``) that fewer
        than about seven digits survive.
    """
    l = _check_l(p, l)
    if not chi > 0.0:
        raise DomainError(f"chi must be positive, got {chi}")
    if sigma is None:
        sigma = min(1.0, 2.0 / chi)
    if not sigma > 0.0:
        raise DomainError("sigma must be positive")
    if h is None:
        h = 0.05 * min(1.0, sigma)
    a = 0.5 / sigma

    def f(tau):
        th = sigma - a * tau * tau + 1j * tau
        return (np.exp(chi * th) * _bromwich_kernel(p, l, th) * (1j - 2.0 * a * tau)).imag

    # truncate where the Gaussian factor has killed the integrand
    peak = abs(f(np.array([0.0]))[0]) + 1e-300
    T = 4.0 * min(1.0, sigma)
    while True:
        tail = np.abs(f(np.linspace(T, 2 * T, 8)))
        if np.all(tail < 1e-18 * peak):
            break
        T *= 2.0
        if T > 1e6:
            raise QuadratureNotConverged(f"integrand does not decay (chi={chi})")
    prev = None
    for _ in range(12):
        n = int(math.ceil(T / h))
        tau = np.linspace(0.0, n * h, n + 1)
        vals = f(tau)
        est = h * (math.fsum(vals) - 0.5 * vals[0] - 0.5 * vals[-1]) / math.pi
        # near chi = 0 the value cancels towards 0, so measure against |f|
        scale = h * float(np.sum(np.abs(vals))) / math.pi
        if prev is not None and abs(est - prev) <= tol * max(abs(est), 1e-3 * scale, 1e-300):
            break
        prev = est
        h *= 0.5
    else:
        raise QuadratureNotConverged(f"trapezoid refinement failed (chi={chi}, l={l})")
    if scale > 1e9 * abs(est):
        raise QuadratureNotConverged(
            f"contour integral cancels by {scale / max(abs(est), 1e-300):.1e} (chi={chi}, l={l})")
    lpref = log_corner_scale(p) + 0.5 * (l - p.alpha) * math.log(p.u0)
    if est == 0.0:
        return LayerValue(-math.inf, 1, "Corner0g")
    return LayerValue(lpref + math.log(abs(est)), 1 if est > 0 else -1, "Corner0g")


# transition layer about y = Y0(z) -----------------------------------------

def transition_Y2(p: ModelParams, z: float) -> float:
    """Width function of the transition layer (see :func:`rays.curve_Y2`)."""
    if not p.gamma < z < 1.0:
        raise DomainError(f"transition_Y2 needs gamma < z < 1, got {z}")
    return rays.curve_Y2(p, z)


def transition_V(p: ModelParams, y: float, z: float) -> float:
    return (y - rays.curve_Y0(p, z)) / (math.sqrt(p.eps) * math.sqrt(transition_Y2(p, z)))


def transition_value(p: ModelParams, y: float, z: float) -> LayerValue:
    """``sqrt(eps) kappa(z) e^{Phi(z)/eps} N(V)`` with ``V = (y - Y0)/sqrt(eps Y2)``."""
    V = transition_V(p, y, z)
    return LayerValue(expansion.log_G_inf(p, z) + float(log_ndtr(V)), 1, "Transition")


# edge z = 0 -----------------------------------------------------------------

def bl_z0(p: ModelParams, k: int, y: float) -> LayerValue:
    """Correction ``F_k(x) - F_k(inf)`` for ``k = O(1)``; negative.

    ``eps^{1/2-k} e^{Psi(y,0)/eps} [lam - gamma S]^k/k! sqrt(rho)/(sqrt(2 pi) S)
    sqrt((lam - gamma S)/((gamma(1-gamma) S + rho) J0))`` with ``S = S(y, 0)``
    the label of the returning ray that ends at ``(y, 0)``.
    """
    k = _check_small_int(k, "k")
    if k > 0.1 * p.N:
        raise DomainError(f"k={k} is not small compared with N={p.N}")
    if not y > 0.0:
        raise DomainError("y must be positive")
    inv = rays.invert_boundary(p, y, 0)
    S, T = inv.s, inv.t
    _, _, Psi0 = expansion.psi_at_ray_end(p, S)
    y_s, z_s = expansion.ray_s_derivatives(p, S, T)
    J0 = (p.gamma * S - p.lam) * y_s + p.gamma * z_s
    b = p.lam - p.gamma * S
    ratio = b / ((p.gamma * (1.0 - p.gamma) * S + p.rho) * J0)
    if not ratio > 0.0:
        raise NumericalError(f"bl_z0: amplitude radicand {ratio:.3e} not positive at y={y}")
    logv = ((0.5 - k) * math.log(p.eps) + Psi0 / p.eps + k * math.log(b) - gammaln(k + 1)
            + 0.5 * math.log(p.rho) - 0.5 * _LOG_2PI - math.log(abs(S)) + 0.5 * math.log(ratio))
    return LayerValue(float(logv), -1, "Z0")


# edge z = 1 -----------------------------------------------------------------

def _edge1_terms(p: ModelParams, y: float) -> tuple[float, float, float]:
    """``(S, Psi(y,1), log|amplitude|)`` for the ``z = 1`` layer."""
    inv = rays.invert_boundary(p, y, 1)
    S, T = inv.s, inv.t
    if abs(S) < 1e-10:
        raise DomainError("S(y,1) vanishes at y = Y0(1); use corner_Y01")
    Psi1 = expansion.psi_on_top(p, S, T)
    y_s, z_s = expansion.ray_s_derivatives(p, S, T)
    b = 1.0 + (1.0 - p.gamma) * S
    J1 = b * y_s - (1.0 - p.gamma) * z_s
    ratio = -b / ((p.rho + p.gamma * (1.0 - p.gamma) * S) * J1)
    if not ratio > 0.0:
        raise NumericalError(f"z=1 layer: amplitude radicand {ratio:.3e} not positive at y={y}")
    lamp = 0.5 * math.log(p.rho) - 0.5 * _LOG_2PI - math.log(abs(S)) + 0.5 * math.log(ratio)
    return S, Psi1, lamp


def _log_F4(p: ModelParams, j: int, y: float) -> tuple[float, int]:
    S, Psi1, lamp = _edge1_terms(p, y)
    b = 1.0 + (1.0 - p.gamma) * S
    logv = ((0.5 - j) * math.log(p.eps) + Psi1 / p.eps + j * math.log(b / p.lam)
            - gammaln(j + 1) + lamp)
    return float(logv), 1 if S > 0 else -1


def bl_z1(p: ModelParams, j: int, y: float) -> LayerValue:
    """``F_k(x)`` for ``j = N - k = O(1)`` and ``0 < y < Y0(1)``.

    ``eps^{1/2-j} e^{Psi(y,1)/eps} [(1 + (1-gamma) S)/lam]^j / j!`` times the
    amplitude built from ``S = S(y, 1) > 0`` and the edge Jacobian.
    """
    j = _check_small_int(j, "j")
    Y01 = rays.curve_Y0(p, 1.0)
    if not 0.0 < y < Y01:
        raise DomainError(f"bl_z1 needs 0 < y < Y0(1)={Y01:.6g}, got {y}")
    lv, sg = _log_F4(p, j, y)
    return LayerValue(lv, sg, "Z1")


def tail_z1(p: ModelParams, j: int, y: float) -> LayerValue:
    """``F_k(x) = F_k(inf) + F4`` above ``Y0(1)``, where the ``z = 1`` layer
    form is negative (``S(y, 1) < 0``)."""
    j = _check_small_int(j, "j")
    Y01 = rays.curve_Y0(p, 1.0)
    if not y > Y01:
        raise DomainError(f"tail_z1 needs y > Y0(1)={Y01:.6g}, got {y}")
    lv, sg = _log_F4(p, j, y)
    lw = _log_binom_weight(p, p.N - j)
    # F_inf - |F4| in log space
    d = lv - lw
    if d >= 0.0:
        raise NumericalError(f"tail_z1: correction exceeds F_k(inf) at y={y}")
    return LayerValue(lw + math.log1p(-math.exp(d)), 1, "TailZ1")


def corner_Y01_V(p: ModelParams, y: float) -> float:
    lam1 = p.lam + 1.0
    B = ((1.0 - p.gamma) * (p.rho - 4.0 * p.lam + 1.0) / lam1**3
         - 2.0 * p.zeta * math.log(p.rho) / lam1**4)
    return (y - rays.curve_Y0(p, 1.0)) / math.sqrt(p.eps) / math.sqrt(B)


def corner_Y01(p: ModelParams, j: int, y: float) -> LayerValue:
    """``(lam/(1+lam))^N (N/lam)^j / j! N(V(y,1))`` near ``(Y0(1), 1)``."""
    j = _check_small_int(j, "j")
    if not y > 0.0:
        raise DomainError("y must be positive")
    V = corner_Y01_V(p, y)
    logv = (p.N * math.log(p.lam / (1.0 + p.lam)) + j * math.log(p.N / p.lam)
            - gammaln(j + 1) + float(log_ndtr(V)))
    return LayerValue(float(logv), 1, "CornerY01")


# boundary x = 0 for gamma < z < 1 ----------------------------------------------

def bl_x0(p: ModelParams, x: float, z: float) -> LayerValue:
    """``F_k(x)`` for buffer contents ``x = O(1)`` and ``gamma < z < 1``.

    Vanishes like ``x^{(z-gamma)/eps + alpha}`` as ``x -> 0``; the gamma
    function factor ``Gamma(phi x/(z-gamma) + 1 - alpha)`` is kept in log form.
    """
    if not x > 0.0:
        raise DomainError("x must be positive")
    if not p.gamma < z < 1.0:
        raise DomainError(f"bl_x0 needs gamma < z < 1, got {z}")
    e, g, lam, phi = p.eps, p.gamma, p.lam, p.phi
    dz = z - g
    xi = x / dz
    logv = (1.5 * (math.log(e) - _LOG_2PI)
            + 0.5 * math.log(p.rho / (phi * g * (1.0 - z))) - math.log(dz)
            + p.alpha * math.log(phi * xi) + log_gamma(phi * xi + 1.0 - p.alpha)
            + dz / e * math.log(x * math.e * e / dz**2)
            + ((z - 1.0) * math.log1p(-z) - math.log1p(lam) + z * math.log(lam)
               - g * math.log(g)) / e
            + phi * xi * math.log(g * e / (phi * dz)) + 2.0 * lam * (1.0 - g) * xi
            + (lam - 1.0) * x)
    return LayerValue(logv, 1, "BLx0")


def corner_01(p: ModelParams, j: int, x: float) -> LayerValue:
    """``F_k(x)`` near the corner ``(x, k) = (0, N)``, ``j = N - k``."""
    j = _check_small_int(j, "j")
    if not x > 0.0:
        raise DomainError("x must be positive")
    e, g, lam, phi = p.eps, p.gamma, p.lam, p.phi
    xi = x / (1.0 - g)
    Psi8 = (1.0 - g) * math.log(x * e * math.e / (1.0 - g) ** 2) - g * math.log(g) \
        + math.log(lam / (lam + 1.0))
    logv = ((1.0 - 2.0 * j) * math.log(e) - _LOG_2PI + Psi8 / e
            + phi * xi * math.log(g * e / ((1.0 - g) * phi)) + (3.0 * lam - 1.0) * x
            + j * math.log((1.0 - g) ** 2 / (lam * x)) - gammaln(j + 1)
            + log_gamma(phi * xi + 1.0 - p.alpha) + p.alpha * math.log(phi * xi)
            + 0.5 * math.log(p.rho / (phi * g)) - math.log(1.0 - g))
    return LayerValue(float(logv), 1, "Corner01")


# dispatcher -----------------------------------------------------------------

BLX0_MIN_DEPTH = 5.0


@dataclass(frozen=True)
class Approximation:
    """Leading-order approximation of ``F_k(x)`` at one state.

    ``deficit`` is ``F_k(inf) - F_k(x)`` when the owning formula is written
    as a correction to ``F_k(inf)`` and ``None`` otherwise.  ``others``
    holds values of other formulas that also apply at the point.
    """

    x: float
    k: int
    F: float
    log_F: float
    deficit: float | None
    source: str
    others: dict = field(default_factory=dict)


def _outer(p: ModelParams, y: float, z: float) -> tuple[float, float, float | None]:
    ev = expansion.evaluate(p, y, z, guard=False)
    if ev.region == "RC":
        return ev.F, ev.logG, None
    d = math.exp(ev.logG)
    F = math.exp(ev.logG_inf) - d
    return F, math.log(F) if F > 0 else -math.inf, d


def approximate(p: ModelParams, k: int, x: float, *, others: bool = False) -> Approximation:
    """Route ``(x, k)`` to the formula that owns it and evaluate ``F_k(x)``.

    Ownership follows :func:`expansion.guard_band`.  On the ``x = 0`` strip
    the corner series takes over from the ``x = 0`` layer when
    ``(z - gamma)/eps <= 5``.
    """
    k = _check_small_int(k, "k")
    if k > p.N:
        raise DomainError(f"k={k} > N={p.N}")
    if not x >= 0.0:
        raise DomainError("x must be nonnegative")
    y, z = x * p.eps, k * p.eps
    if x == 0.0 and k > p.floor_c:
        return Approximation(x, k, 0.0, -math.inf, None, "BoundaryCondition")
    tag = expansion.guard_band(p, y, z) if 0.0 < z < 1.0 else ("Z0" if k == 0 else "Z1")
    if tag in ("Z1", "Corner01") and k == p.N:
        tag = "Corner01" if y < 2 * p.eps else "Z1"
    extra: dict = {}
    deficit = None
    l = k - p.floor_c
    if tag == "BLx0" and (z - p.gamma) / p.eps <= BLX0_MIN_DEPTH:
        tag = "Corner0g"
    if tag == "Corner0g":
        lv = corner_spectral(p, l, x * p.N)
        F = lv.value
        deficit = math.exp(log_corner_F_inf(p, l)) - F
    elif tag == "Transition":
        lv = transition_value(p, y, z)
        F = lv.value
        deficit = math.exp(expansion.log_G_inf(p, z)) - F
    elif tag == "Z0":
        if y == 0.0:
            raise DomainError("x = 0 on the z = 0 edge is outside every layer formula")
        corr = bl_z0(p, k, y).value
        Finf = math.exp(_log_binom_weight(p, k))
        F, deficit = Finf + corr, -corr
    elif tag == "Corner01":
        if x == 0.0:
            raise DomainError("x must be positive")
        F = corner_01(p, p.N - k, x).value
    elif tag == "Z1":
        j = p.N - k
        Y01 = rays.curve_Y0(p, 1.0)
        width = 2.0 * math.sqrt(p.eps) * math.sqrt(rays.curve_Y2(p, 1.0 - 1e-12))
        if abs(y - Y01) < width:
            tag = "CornerY01"
            F = corner_Y01(p, j, y).value
        elif y < Y01:
            F = bl_z1(p, j, y).value
        else:
            tag = "TailZ1"
            F = tail_z1(p, j, y).value
            deficit = math.exp(_log_binom_weight(p, k)) - F
    elif tag == "BLx0":
        if x == 0.0:
            return Approximation(x, k, 0.0, -math.inf, None, "BoundaryCondition")
        F = bl_x0(p, x, z).value
    else:
        tag = "Outer"
        F, _, deficit = _outer(p, y, z)
    if others and tag != "Outer" and 0.0 < z < 1.0 and y > 0.0:
        try:
            extra["Outer"] = _outer(p, y, z)[0]
        except Exception as exc:  # outer form may be undefined inside a layer
            extra["Outer"] = f"undefined: {type(exc).__name__}"
    logF = math.log(F) if F > 0 else -math.inf
    return Approximation(x, k, F, logF, deficit, tag, extra)
