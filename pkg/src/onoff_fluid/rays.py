"""Characteristic curves (rays) of the eikonal equation.

All rays of the outer expansion start at the corner ``(y, z) = (0, gamma)``
at ``t = 0`` and are labelled by ``s``, the constant value of ``Psi_y``
along the ray.  This module evaluates the explicit ray map, the special
curves that organise the ray family, and inverts the map numerically.

Branch geometry used by :func:`invert_ray` (``z* = gamma^2/delta``):

* ``s > S0``: ``z`` increases monotonically with ``t``.
* ``s = S0``: ``u`` is constant and ``z -> z*``.
* ``s < S0``: ``z`` peaks at ``Tmax``, returns to ``gamma`` at ``Tgamma``
  and reaches ``z = 0`` at a finite time where ``u`` blows up.

For ``gamma < z < z*`` the early (``plus``) root covers ``0 < y < Ymax(z)``
and the late (``minus``) root covers ``y > Ymax(z)``.  For ``z >= z*``
every ray with ``s > S0`` crosses level ``z`` once, so the plus root covers
all ``y > 0``.  Below ``gamma`` only returning rays (``s < S0``) are present.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import BranchUnavailable, DomainError, NoConvergence, SingularPoint
from .model import ModelParams

Branch = Literal["plus", "minus"]
Region = Literal["R", "RC", "OnY0", "Corner"]

_EXP_MAX = 700.0


@dataclass(frozen=True)
class RayCoord:
    """Ray coordinates: label ``s`` and travel parameter ``t >= 0``."""

    s: float
    t: float

    def __post_init__(self):
        if not self.t >= 0.0:
            raise DomainError(f"t must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class StatePoint:
    """Scaled state ``y = x/N``, ``z = k/N`` with its region tag."""

    y: float
    z: float
    region: str = ""


@dataclass(frozen=True)
class RayDerived:
    Delta: float
    r1: float
    r2: float
    A1: float
    A2: float
    A3: float
    gap: float  # u0 - r1, which vanishes on the s = S0 ray


def ray_derived(p: ModelParams, s: float) -> RayDerived:
    """Roots of the Riccati equation and the coefficients of ``z(s, t)``."""
    lam, g, rho = p.lam, p.gamma, p.rho
    D = math.sqrt((lam - s - 1.0) ** 2 + 4.0 * lam)
    b = s + 1.0 - lam
    # compute the larger-magnitude root directly, the other from r1*r2 = -lam
    if b >= 0.0:
        r1 = 0.5 * (b + D)
        r2 = -lam / r1
    else:
        r2 = 0.5 * (b - D)
        r1 = -lam / r2
    D2 = D * D
    # (sg + rho - lam)^2 - g^2 D^2 = -4 lam g (1-g)(s - S0): divide it by the
    # non-cancelling factor so A1 (zero at S0) and A2 stay accurate
    h = s * g + rho - lam
    prod = -4.0 * lam * (g * (1.0 - g) * s + rho)
    if h < 0.0:
        f1, f2 = prod / (h - g * D), h - g * D
    else:
        f1, f2 = h + g * D, prod / (h + g * D)
    # lam + 1 - s -+ D likewise, using (lam+1-s)^2 - D^2 = -4 s
    k = lam + 1.0 - s
    if k >= 0.0:
        e1, e2 = k + D, -4.0 * s / (k + D)
    else:
        e1, e2 = -4.0 * s / (k - D), k - D
    A1 = e1 * f1 / (4.0 * D2)
    A2 = e2 * f2 / (4.0 * D2)
    A3 = (lam * (1.0 + lam) + (g - g * lam - lam) * s + g * s * s) / D2
    # (u0 - r1)(u0 - r2) = -u0 (s - S0)
    gap = -p.u0 * (g * (1.0 - g) * s + rho) / (g * (1.0 - g)) / (p.u0 - r2)
    return RayDerived(D, r1, r2, A1, A2, A3, gap)


def _coord(rc_or_s, t=None) -> tuple[float, float]:
    if isinstance(rc_or_s, RayCoord):
        return rc_or_s.s, rc_or_s.t
    if t is None:
        raise TypeError("pass a RayCoord or (s, t)")
    if not t >= 0.0:
        raise DomainError(f"t must be nonnegative, got {t}")
    return float(rc_or_s), float(t)


def ray_point(p: ModelParams, rc, t: float | None = None) -> tuple[float, float]:
    """Closed-form ray map ``(s, t) -> (y, z)`` (exponential form).

    ``expm1`` keeps the small-``t`` behaviour ``y ~ rho t^2/2`` accurate.
    Beyond ``Delta t = 700`` the coordinates overflow to ``+-inf``.
    """
    s, t = _coord(rc, t)
    d = ray_derived(p, s)
    Dt = d.Delta * t
    if Dt > _EXP_MAX:
        big = math.copysign(math.inf, d.A1) if d.A1 != 0 else 0.0
        return big, big
    e_p = math.expm1(Dt)
    e_m = math.expm1(-Dt)
    y = d.A1 / d.Delta * e_p - d.A2 / d.Delta * e_m + (d.A3 - p.gamma) * t
    z = d.A1 * (e_p + 1.0) + d.A2 * (e_m + 1.0) + d.A3
    return y, z


def ray_point_hyperbolic(p: ModelParams, rc, t: float | None = None) -> tuple[float, float]:
    """Same map in hyperbolic-function form; used as a cross-check."""
    s, t = _coord(rc, t)
    lam, g, rho, phi = p.lam, p.gamma, p.rho, p.phi
    D = math.sqrt((lam - s - 1.0) ** 2 + 4.0 * lam)
    a = phi * s + (lam + 1.0) * rho
    q = g * s * s + (g - lam - lam * g) * s + lam * (lam + 1.0)
    Dt = D * t
    sh, ch = math.sinh(Dt), math.cosh(Dt)
    y = (a / D * sh + rho * (ch - 1.0) + q * t) / D**2 - g * t
    z = (a * ch + rho * D * sh + q) / D**2
    return y, z


def _log_w_factor(d: RayDerived, w: float, t: float) -> float:
    """``ln(e^{Dt}(D-w)/D + w/D)``, i.e. ``-ln((u-r2)/(u0-r2))``."""
    D = d.Delta
    A = -d.gap / D
    B = w / D
    Dt = D * t
    if A >= 0.0:
        if Dt > _EXP_MAX:
            return Dt + math.log(A) if A > 0 else math.log(B)
        return Dt + math.log(A + B * math.exp(-Dt))
    val = -A / B * math.exp(min(Dt, _EXP_MAX))
    if val >= 1.0:
        raise DomainError("t beyond the end of the ray (u has blown up)")
    return math.log(B) + math.log1p(-val)


def ray_u(p: ModelParams, rc, t: float | None = None) -> float:
    """``u = exp(Psi_z)`` along the ray, solving ``u' = (u-r1)(u-r2)``."""
    s, t = _coord(rc, t)
    d = ray_derived(p, s)
    w = p.u0 - d.r2
    return d.r2 + w * math.exp(-_log_w_factor(d, w, t))


def ray_t_end(p: ModelParams, s: float) -> float:
    """Travel time at which a returning ray (``s < S0``) reaches ``z = 0``."""
    if s >= p.S0:
        return math.inf
    d = ray_derived(p, s)
    w = p.u0 - d.r2
    if d.gap <= 0.0:
        return math.inf
    return math.log(w / d.gap) / d.Delta


# special curves ---------------------------------------------------------

def _check_z(z: float, lo: float, hi: float, name: str, closed_hi=True):
    ok = lo <= z <= hi if closed_hi else lo <= z < hi
    if not ok:
        raise DomainError(f"{name}: z={z} outside [{lo}, {hi}{']' if closed_hi else ')'}")


def curve_Y0(p: ModelParams, z: float) -> float:
    """The ``s = 0`` ray, separating the shadow region from the rest."""
    _check_z(z, p.gamma, 1.0, "curve_Y0")
    lam1 = p.lam + 1.0
    return (z - p.gamma) / lam1 - p.rho / lam1**2 * math.log((z * lam1 - p.lam) / p.rho)


def t_on_Y0(p: ModelParams, z: float) -> float:
    """Travel time of the ``s = 0`` ray at level ``z``."""
    _check_z(z, p.gamma, 1.0, "t_on_Y0")
    lam1 = p.lam + 1.0
    return math.log((z * lam1 - p.lam) / p.rho) / lam1


def _Y2_slope(p: ModelParams, z):
    lz = p.lam * z + z - p.lam
    return -(p.lam * z - z - p.lam) * (z - p.gamma) ** 2 / lz**3


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def curve_Y2(p: ModelParams, z: float) -> float:
    """Variance scale of the transition layer about ``y = Y0(z)``.

    ``Y2`` solves ``dY2/dz = -(lam z - z - lam)(z-gamma)^2/((lam+1)z - lam)^3``
    with ``Y2(gamma) = 0``.  The closed form cancels to ``O((z-gamma)^3)``
    near ``gamma``, so short intervals use Gauss-Legendre quadrature of the
    slope instead.
    """
    _check_z(z, p.gamma, 1.0, "curve_Y2")
    dz = z - p.gamma
    if dz < 0.05:
        nodes = p.gamma + 0.5 * dz * (_GL_X + 1.0)
        return float(0.5 * dz * np.dot(_GL_W, _Y2_slope(p, nodes)))
    lam1 = p.lam + 1.0
    lz = p.lam * z + z - p.lam
    return (2.0 * p.zeta / lam1**4 * math.log(lz / p.rho)
            - dz / (lam1 * lz**2) * (2.0 * p.zeta * p.rho / lam1**2
                                     + 3.0 * p.zeta * dz / lam1 + (p.lam - 1.0) * dz**2))


def curve_Y1(p: ModelParams, z: float) -> float:
    """The ``s = S0`` ray, which creeps up to ``z* = gamma^2/delta``."""
    _check_z(z, p.gamma, p.z_star, "curve_Y1", closed_hi=False)
    g1 = p.gamma * (1.0 - p.gamma)
    r = (p.gamma**2 - p.delta * z) / (g1 * p.rho)
    return g1**2 * p.rho / p.delta**2 * (r - math.log(r) - 1.0)


def t_on_Y1(p: ModelParams, z: float) -> float:
    _check_z(z, p.gamma, p.z_star, "t_on_Y1", closed_hi=False)
    g1 = p.gamma * (1.0 - p.gamma)
    return g1 / p.delta * math.log(g1 * p.rho / (p.gamma**2 - p.delta * z))


def s_max(p: ModelParams, z: float) -> float:
    """Label of the returning ray whose peak height is ``z``."""
    lam = p.lam
    return (z + lam * (1.0 - z) - 2.0 * math.sqrt(z * lam * (1.0 - z))) / (p.gamma - z)


def t_max(p: ModelParams, s: float) -> float:
    """Time at which a returning ray (``s < S0``) reaches its peak."""
    if s >= p.S0:
        raise DomainError("t_max defined only for s < S0")
    d = ray_derived(p, s)
    return math.log(d.A2 / d.A1) / (2.0 * d.Delta)


def curve_Ymax(p: ModelParams, z: float) -> tuple[float, float]:
    """``(s_max, y_max)``: where returning rays peak at height ``z``."""
    if not p.gamma < z < p.z_star:
        raise DomainError(f"curve_Ymax: z={z} outside ({p.gamma}, {p.z_star})")
    s = s_max(p, z)
    d = ray_derived(p, s)
    y = -p.rho / d.Delta**2 + (d.A3 - p.gamma) / (2.0 * d.Delta) * math.log(d.A2 / d.A1)
    return s, y


def y_max_or_inf(p: ModelParams, z: float) -> float:
    """``Ymax(z)`` for ``gamma < z < z*`` and ``+inf`` for ``z >= z*``."""
    if z >= p.z_star:
        return math.inf
    return curve_Ymax(p, z)[1]


def _quadratic_roots(d: RayDerived, z: float, clamp: bool):
    """Both roots ``X = e^{Delta t}`` of ``A1 X^2 - (z-A3) X + A2 = 0``.

    Returned as (plus, minus) following the sign in front of the square
    root, each computed in the cancellation-free arrangement.
    """
    b = z - d.A3
    disc = b * b - 4.0 * d.A1 * d.A2
    if disc < 0.0:
        if clamp and disc > -1e-12 * max(b * b, 1e-300):
            disc = 0.0
        else:
            raise BranchUnavailable(f"level z={z} not reached (discriminant {disc:.3e})")
    sq = math.sqrt(disc)
    out = []
    for sign in (1.0, -1.0):
        num = b + sign * sq
        den = b - sign * sq
        # X = num/(2 A1) = 2 A2/den; pick the form without cancellation
        if abs(num) >= abs(den) and d.A1 != 0.0:
            X = num / (2.0 * d.A1)
        elif den != 0.0:
            X = 2.0 * d.A2 / den
        else:
            X = math.nan
        out.append(X)
    return out[0], out[1]


def t_branch(p: ModelParams, s: float, z: float, branch: Branch, *, clamp: bool = False) -> float:
    """Travel time at which ray ``s`` crosses level ``z`` (``T_+`` or ``T_-``).

    Raises
    ------
    BranchUnavailable
        If the ray never reaches ``z`` or the root is not a positive time.
    """
    d = ray_derived(p, s)
    Xp, Xm = _quadratic_roots(d, z, clamp)
    X = Xp if branch == "plus" else Xm
    # X = e^{Delta t} must correspond to t >= 0 (up to rounding at t = 0)
    if not X >= 1.0 - 1e-12:
        raise BranchUnavailable(f"no {branch} root with t >= 0 for s={s}, z={z}")
    return max(math.log(X), 0.0) / d.Delta


def u_branch(p: ModelParams, s: float, z: float, branch: Branch) -> float:
    """Closed-form ``U_+/U_-``: solve ``z(u)`` for ``u`` at fixed ``s``."""
    lam, g = p.lam, p.gamma
    dz = z - g
    rad = (p.rho**2 + (2.0 * (lam + 1.0) * p.rho + 2.0 * p.phi * s) * dz
           + ((lam + 1.0) ** 2 + 2.0 * (1.0 - lam) * s + s * s) * dz * dz)
    if rad < 0.0:
        raise BranchUnavailable(f"negative radicand for s={s}, z={z}")
    base = 0.5 * (s + 1.0 - lam + (lam - g * s) / z)
    sq = 0.5 * math.sqrt(rad) / z
    return base + sq if branch == "plus" else base - sq


def z_of_u(p: ModelParams, s: float, u: float) -> float:
    """``z`` as a function of ``u`` along ray ``s`` (first integral)."""
    return ((p.lam - p.gamma * s) * u - p.lam) / (u * u + (p.lam - 1.0 - s) * u - p.lam)


def t_gamma(p: ModelParams, s: float) -> float:
    """Time at which a returning ray comes back to ``z = gamma``."""
    if not s < p.S0:
        raise DomainError(f"t_gamma requires s < S0={p.S0}, got {s}")
    D = ray_derived(p, s).Delta
    a = p.phi * s + (p.lam + 1.0) * p.rho
    # (a - rho D)(a + rho D) = 4 lam g (1-g) s (s - S0)
    prod = 4.0 * p.lam * s * (p.gamma * (1.0 - p.gamma) * s + p.rho)
    if a < 0.0:
        lo_, hi_ = a - p.rho * D, prod / (a - p.rho * D)
    else:
        hi_ = a + p.rho * D
        lo_ = prod / hi_
    return math.log(lo_ / hi_) / D


def y_at_t_gamma(p: ModelParams, s: float) -> float:
    """Closed form of ``y(s, Tgamma(s))``, the height reached at ``z = gamma``."""
    D = ray_derived(p, s).Delta
    T = t_gamma(p, s)
    return -((p.phi * s + p.rho * (p.lam + 1.0)) * T + 2.0 * p.rho) / D**2


def curve_Yinf(p: ModelParams, z: float, y0: float, z0: float) -> float:
    """Ray from infinity through the boundary point ``(y0, z0)``.

    Along these rays ``Psi_y = 0``; they are the level curves of the
    stationary marginal and fill the complement of the shadow region.
    """
    lam1 = p.lam + 1.0
    zc = p.lam / lam1
    if abs(z0 - zc) < 1e-15:
        raise DomainError("z0 = lambda/(lambda+1) gives a vertical ray")
    arg = (lam1 * z - p.lam) / (lam1 * z0 - p.lam)
    if arg <= 0:
        raise DomainError(f"z={z} not on the ray through z0={z0}")
    return y0 + (z - z0) / lam1 - p.rho / lam1**2 * math.log(arg)


# classification and inversion --------------------------------------------

CORNER_Y = 1e-10
CORNER_Z = 1e-6


def classify(p: ModelParams, y: float, z: float, tol: float = 1e-12) -> str:
    """Region tag: ``RC`` (shadow), ``R``, ``OnY0`` or ``Corner``."""
    if y < CORNER_Y and abs(z - p.gamma) < CORNER_Z:
        return "Corner"
    if z <= p.gamma:
        return "R"
    Y0 = curve_Y0(p, min(z, 1.0))
    if abs(y - Y0) <= tol * max(1.0, Y0):
        return "OnY0"
    return "RC" if y < Y0 else "R"


def select_branch(p: ModelParams, y: float, z: float) -> Branch:
    """Which ``T`` root reaches ``(y, z)``."""
    if z < p.gamma:
        return "minus"
    return "plus" if y < y_max_or_inf(p, z) else "minus"


@dataclass(frozen=True)
class Inversion:
    s: float
    t: float
    branch: str
    region: str


def _bisect(f, lo: float, hi: float, increasing: bool, rel: float = 1e-13,
            maxit: int = 400) -> float:
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        v = f(mid)
        if (v > 0.0) == increasing:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rel * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


_V_MIN = math.log(1e-14)
_Y_RTOL = 1e-5


def _solve_below_S0(p: ModelParams, f, what: str) -> float:
    """Root of increasing ``f(s)`` on ``s < S0``.

    The curves ending on ``z = gamma`` and ``z = 0`` grow like ``-ln(S0 - s)``
    as ``s -> S0``, so the search runs on ``v = ln(S0 - s)``.
    """
    scale = max(1.0, abs(p.S0))
    g = lambda v: f(p.S0 - scale * math.exp(v))
    hi = 0.0
    while g(hi) > 0.0:
        hi += 1.0
        if hi > 30.0:
            raise NoConvergence(f"no bracket for {what}")
    lo = hi - 1.0
    while g(lo) <= 0.0:
        lo -= 1.0
        if lo < _V_MIN:
            raise NoConvergence(f"{what}: S0 - s would fall below double resolution")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    s = p.S0 - scale * math.exp(0.5 * (lo + hi))
    # near S0 adjacent doubles of s map to visibly different y
    r0 = f(s)
    if not abs(r0) <= _Y_RTOL * max(1.0, abs(r0 + 0.0)):
        raise NoConvergence(f"{what}: residual {r0:.2e} after bisection")
    return s


def _bisect_toward_S0(p: ModelParams, g, s_lo: float) -> float:
    """Root of increasing ``g`` on ``(s_lo, S0)`` with ``g(s_lo) < 0``.

    Bisects in ``ln(S0 - s)``, which resolves the logarithmic growth of
    ``y`` near ``S0`` far better than bisecting in ``s``.
    """
    v_hi = math.log(p.S0 - s_lo)
    v_lo = v_hi - 1.0
    while g(p.S0 - math.exp(v_lo)) <= 0.0:
        v_lo -= 1.0
        if v_lo < math.log(abs(p.S0)) + _V_MIN:
            raise NoConvergence("root too close to S0 for double precision")
    for _ in range(200):
        mid = 0.5 * (v_lo + v_hi)
        if g(p.S0 - math.exp(mid)) > 0.0:
            v_lo = mid
        else:
            v_hi = mid
        if v_hi - v_lo < 1e-15 * max(1.0, abs(mid)):
            break
    return p.S0 - math.exp(0.5 * (v_lo + v_hi))


def _bisect_above_S0(p: ModelParams, g) -> float:
    """Root of ``g`` on ``(S0, 0)``, decreasing from ``+inf`` at ``S0``, in ``ln(s - S0)``."""
    v_hi = math.log(-p.S0)
    v_lo = v_hi + _V_MIN
    if g(p.S0 + math.exp(v_lo)) <= 0.0:
        raise NoConvergence("root too close to S0 for double precision")
    for _ in range(200):
        mid = 0.5 * (v_lo + v_hi)
        if g(p.S0 + math.exp(mid)) > 0.0:
            v_lo = mid
        else:
            v_hi = mid
        if v_hi - v_lo < 1e-15 * max(1.0, abs(mid)):
            break
    return p.S0 + math.exp(0.5 * (v_lo + v_hi))


def invert_on_gamma(p: ModelParams, y: float) -> float:
    """``s < S0`` such that the returning ray passes through ``(y, gamma)``."""
    if not y > 0:
        raise DomainError("y must be positive")
    return _solve_below_S0(p, lambda s: y_at_t_gamma(p, s) - y, f"y={y} on z=gamma")


def invert_ray(p: ModelParams, pt: StatePoint | tuple) -> Inversion:
    """Find ``(s, t)`` with ``ray_point(s, t) = (y, z)``.

    Solves ``y(s, T_b(s, z)) = y`` by bisection in ``s`` on the branch
    ``b`` selected from the ray geometry.  The sign of ``s`` follows the
    region: ``s > 0`` in the shadow region, ``s < 0`` elsewhere.
    """
    y, z = (pt.y, pt.z) if isinstance(pt, StatePoint) else pt
    if not (y > 0.0 and 0.0 < z < 1.0):
        raise DomainError(f"({y}, {z}) outside the open strip y>0, 0<z<1")
    if y < CORNER_Y and abs(z - p.gamma) < CORNER_Z:
        raise SingularPoint(f"({y}, {z}) is at the corner (0, gamma)")
    region = classify(p, y, z)
    if abs(z - p.gamma) <= 1e-14:
        s = invert_on_gamma(p, y)
        return Inversion(s, t_gamma(p, s), "minus", "R")
    branch = select_branch(p, y, z)

    def g(s):
        t = t_branch(p, s, z, branch, clamp=True)
        return ray_point(p, s, t)[0] - y

    if z > p.gamma and branch == "plus":
        if region == "OnY0":
            s = 0.0
        elif region == "RC":
            lo, hi = 0.0, 1.0
            while g(hi) > 0.0:
                lo, hi = hi, 2.0 * hi
                if hi > 1e12:
                    raise NoConvergence(f"no bracket at ({y}, {z})")
            s = _bisect(g, lo, hi, increasing=False)
        elif z < p.z_star:
            s = _bisect(g, s_max(p, z), 0.0, increasing=False)
        else:
            s = _bisect_above_S0(p, g)
    elif z > p.gamma:
        s = _bisect_toward_S0(p, g, s_max(p, z))
    else:
        step = 1.0
        lo = p.S0 - step
        while True:
            try:
                v = g(lo)
            except BranchUnavailable:
                v = math.inf
            if v < 0.0:
                break
            step *= 2.0
            lo = p.S0 - step
            if step > 1e12:
                raise NoConvergence(f"no bracket at ({y}, {z})")
        s = _bisect_toward_S0(p, g, lo)
    t = t_branch(p, s, z, branch, clamp=True)
    yy, zz = ray_point(p, s, t)
    if not (abs(yy - y) <= 1e-8 * max(1.0, abs(y)) and abs(zz - z) <= 1e-8):
        raise NoConvergence(f"inversion residual too large at ({y}, {z}): ({yy}, {zz})")
    return Inversion(s, t, branch, region)


def y_at_ray_end(p: ModelParams, s: float) -> float:
    """``y`` where a returning ray (``s < S0``) reaches ``z = 0``."""
    t = ray_t_end(p, s)
    if not math.isfinite(t):
        raise BranchUnavailable(f"ray s={s} does not reach z=0")
    return ray_point(p, s, t)[0]


def invert_boundary(p: ModelParams, y: float, edge: int) -> Inversion:
    """Ray coordinates of the boundary point ``(y, edge)``, ``edge`` in {0, 1}.

    On ``z = 0`` the ray is the returning ray that ends at ``y``.  On
    ``z = 1`` every ray with ``s > S0`` crosses once, on the plus root.
    """
    if not y > 0.0:
        raise DomainError("y must be positive")
    if edge == 0:
        def f(s):
            try:
                return y_at_ray_end(p, s) - y
            except BranchUnavailable:
                return -math.inf
        s = _solve_below_S0(p, f, f"y={y} on z=0")
        return Inversion(s, ray_t_end(p, s), "minus", "R")
    if edge != 1:
        raise DomainError("edge must be 0 or 1")

    def g(s):
        return ray_point(p, s, t_branch(p, s, 1.0, "plus", clamp=True))[0] - y

    Y01 = curve_Y0(p, 1.0)
    if y < Y01:
        lo, hi = 0.0, 1.0
        while g(hi) > 0.0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                raise NoConvergence(f"no bracket for y={y} on z=1")
        s = _bisect(g, lo, hi, increasing=False)
        region = "RC"
    elif y == Y01:
        s, region = 0.0, "OnY0"
    else:
        s = _bisect(g, p.S0, 0.0, increasing=False)
        region = "R"
    return Inversion(s, t_branch(p, s, 1.0, "plus", clamp=True), "plus", region)
