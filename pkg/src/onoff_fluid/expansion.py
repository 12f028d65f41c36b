"""Outer (ray) approximation of the stationary distribution.

Away from layers, ``F_k(x) = G(y, z)`` with ``y = x/N``, ``z = k/N`` is

* ``G ~ eps exp(Psi/eps) K`` in the shadow region ``RC`` (``y < Y0(z)``),
* ``G(inf, z) - G ~ -eps exp(Psi/eps) K`` in ``R``,

where ``Psi(y, z) = psi(s, t)`` and ``K(y, z) = K(s, t)`` are evaluated at
the ray coordinates of the point.  Magnitudes are kept in log space since
``exp(Psi/eps)`` underflows for a few hundred sources.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import rays
from .errors import CausticError, DomainError, LayerRegion, NumericalError, SZero, SingularLog
from .model import ModelParams

_TWO_PI = 2.0 * math.pi


def phi_kappa(p: ModelParams, z: float) -> tuple[float, float]:
    """Exponent and prefactor of the Stirling form of the binomial weights.

    ``F_k(inf) ~ sqrt(eps) kappa(z) exp(Phi(z)/eps)``.
    """
    if not 0.0 < z < 1.0:
        raise DomainError(f"phi_kappa needs 0 < z < 1, got {z}")
    Phi = -z * math.log(z) - (1.0 - z) * math.log1p(-z) + z * math.log(p.lam) - math.log1p(p.lam)
    kappa = 1.0 / math.sqrt(_TWO_PI * z * (1.0 - z))
    return Phi, kappa


def log_G_inf(p: ModelParams, z: float) -> float:
    """Log of the Stirling approximation to ``F_k(inf)`` at ``z = k/N``."""
    Phi, kappa = phi_kappa(p, z)
    return 0.5 * math.log(p.eps) + math.log(kappa) + Phi / p.eps


def ray_C1(p: ModelParams, d: rays.RayDerived, s: float) -> float:
    return ((p.lam - p.gamma * s) * d.r1 - p.lam) / (d.r1 * d.Delta)


def ray_C2(p: ModelParams, d: rays.RayDerived, s: float) -> float:
    return ((p.lam - p.gamma * s) * d.r2 - p.lam) / (d.r2 * d.Delta)


def psi_value(p: ModelParams, s: float, t: float) -> float:
    """Exponent ``psi(s, t)`` along the rays from the corner.

    Uses ``C2 - C1 = 1`` to combine the two logarithms of the integrated
    characteristic equation, which keeps the expression finite up to the
    end of a returning ray (``z -> 0``, ``u -> inf``).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    d = rays.ray_derived(p, s)
    w = p.u0 - d.r2
    y, z = rays.ray_point(p, s, t)
    u = rays.ray_u(p, s, t)
    if abs(u - d.r1) < 1e-14 * max(1.0, abs(d.r1)) or abs(u - d.r2) < 1e-14:
        raise SingularLog(f"u hits a Riccati root at s={s}, t={t}")
    Phi_g, _ = phi_kappa(p, p.gamma)
    return (Phi_g + (1.0 - p.gamma) * math.log(p.u0) + s * y + z * math.log(u)
            + math.log1p(-d.r2 / u) - math.log(w) - ray_C1(p, d, s) * d.Delta * t)


def psi_at_ray_end(p: ModelParams, s: float) -> tuple[float, float, float]:
    """``(y, t, psi)`` where a returning ray reaches ``z = 0``."""
    t = rays.ray_t_end(p, s)
    if not math.isfinite(t):
        raise DomainError(f"ray s={s} does not reach z=0")
    d = rays.ray_derived(p, s)
    y, _ = rays.ray_point(p, s, t)
    Phi_g, _ = phi_kappa(p, p.gamma)
    psi = (Phi_g + (1.0 - p.gamma) * math.log(p.u0) + s * y
           - math.log(p.u0 - d.r2) - ray_C1(p, d, s) * d.Delta * t)
    return y, t, psi


def psi_on_top(p: ModelParams, s: float, t: float) -> float:
    """``psi`` where ray ``s`` meets ``z = 1`` at time ``t``.

    There ``u = 0`` and ``z ln u + ln(1 - r2/u) = (z-1) ln u + ln(u - r2)``
    tends to ``ln(-r2)``.
    """
    d = rays.ray_derived(p, s)
    y, _ = rays.ray_point(p, s, t)
    Phi_g, _ = phi_kappa(p, p.gamma)
    return (Phi_g + (1.0 - p.gamma) * math.log(p.u0) + s * y + math.log(-d.r2)
            - math.log(p.u0 - d.r2) - ray_C1(p, d, s) * d.Delta * t)


def omega_value(p: ModelParams, s: float, u: float) -> float:
    return ((p.lam - s * p.gamma) * u - p.lam) / (u * (p.rho + p.gamma * (1.0 - p.gamma) * s))


def fd_step(s: float, S0: float | None = None) -> float:
    """Step for differences in the ray label; never reaches across ``S0``."""
    h = 1e-6 * max(1.0, abs(s))
    if S0 is not None:
        # a floor of ~100 ulp keeps the difference nonzero when s sits on S0
        h = max(min(h, 1e-3 * abs(s - S0)), 1e-14 * max(1.0, abs(s)))
    return h


def ray_s_derivatives(p: ModelParams, s: float, t: float) -> tuple[float, float]:
    """Central differences ``(y_s, z_s)`` at fixed ``t``."""
    h = fd_step(s, p.S0)
    yp, zp = rays.ray_point(p, s + h, t)
    ym, zm = rays.ray_point(p, s - h, t)
    return (yp - ym) / (2.0 * h), (zp - zm) / (2.0 * h)


def jacobian(p: ModelParams, s: float, t: float) -> float:
    """``J = z_t y_s - z_s y_t`` of the map ``(s, t) -> (y, z)``."""
    y, z = rays.ray_point(p, s, t)
    u = rays.ray_u(p, s, t)
    z_t = p.lam * (1.0 - z) / u - z * u
    y_t = z - p.gamma
    y_s, z_s = ray_s_derivatives(p, s, t)
    return z_t * y_s - z_s * y_t


def _amp_core(p: ModelParams, s: float, t: float) -> tuple[float, float, float]:
    """``(z^{-1/2} sqrt(omega/J), omega, J)``."""
    if t <= 0:
        raise CausticError("amplitude undefined at t=0")
    _, z = rays.ray_point(p, s, t)
    u = rays.ray_u(p, s, t)
    om = omega_value(p, s, u)
    J = jacobian(p, s, t)
    if abs(J) < 1e-13:
        raise CausticError(f"|J|={abs(J):.2e} at s={s}, t={t}")
    ratio = om / J
    if ratio <= 0.0:
        raise NumericalError(f"omega/J={ratio:.3e} is not positive at s={s}, t={t}")
    return math.sqrt(ratio / z), om, J


def transport_K(p: ModelParams, s: float, t: float) -> tuple[float, float, float]:
    """Amplitude ``K = sqrt(rho)/(2 pi s) z^{-1/2} sqrt(omega/J)``.

    Returns ``(K, omega, J)``.
    """
    if abs(s) < 1e-10:
        raise SZero("K is infinite on the s=0 ray")
    core, om, J = _amp_core(p, s, t)
    return math.sqrt(p.rho) / (_TWO_PI * s) * core, om, J


def guard_band(p: ModelParams, y: float, z: float) -> str | None:
    """Name of the layer owning ``(y, z)``, or ``None`` for the outer region.

    Band widths are twice the natural scale of each layer.
    """
    e = p.eps
    if abs(z - p.gamma) < 2 * e and y < 2 * e:
        return "Corner0g"
    if z < 2 * e:
        return "Z0"
    if 1.0 - z < 2 * e:
        return "Corner01" if y < 2 * e else "Z1"
    if z > p.gamma:
        if y < 2 * e:
            return "BLx0"
        Y0 = rays.curve_Y0(p, z)
        if abs(y - Y0) < 2.0 * math.sqrt(e) * math.sqrt(rays.curve_Y2(p, z)):
            return "Transition"
    return None


@dataclass(frozen=True)
class RayEval:
    """Outer approximation at one state point.

    ``logG`` is the log of ``G`` in RC and of ``G(inf,z) - G`` in R;
    ``logG_inf`` is the Stirling form of ``F_k(inf)``.
    """

    y: float
    z: float
    s: float
    t: float
    u: float
    psi: float
    omega: float
    jac: float
    K: float
    logG: float
    sign: int
    region: str
    branch: str
    logG_inf: float
    layer: str | None = None

    @property
    def F(self) -> float:
        """Approximation of ``F_k(x)`` itself."""
        if self.region == "RC":
            return math.exp(self.logG)
        return math.exp(self.logG_inf) - math.exp(self.logG)

    @property
    def deficit(self) -> float:
        """``F_k(x)`` in RC, ``F_k(inf) - F_k(x)`` in R (both positive)."""
        return math.exp(self.logG)


def evaluate(p: ModelParams, y: float, z: float, *, guard: bool = True) -> RayEval:
    """Outer approximation at ``(y, z)``.

    Parameters
    ----------
    guard : bool
        If true, points inside a layer guard band raise :class:`LayerRegion`.
    """
    layer = guard_band(p, y, z)
    if guard and layer is not None:
        raise LayerRegion(f"({y}, {z}) lies in the {layer} layer")
    inv = rays.invert_ray(p, (y, z))
    s, t = inv.s, inv.t
    K, om, J = transport_K(p, s, t)
    psi = psi_value(p, s, t)
    u = rays.ray_u(p, s, t)
    logG = math.log(p.eps) + psi / p.eps + math.log(abs(K))
    region = "RC" if s > 0 else "R"
    return RayEval(y=y, z=z, s=s, t=t, u=u, psi=psi, omega=om, jac=J, K=K,
                   logG=logG, sign=1 if K > 0 else -1, region=region,
                   branch=inv.branch, logG_inf=log_G_inf(p, z), layer=layer)


def Psi(p: ModelParams, y: float, z: float) -> float:
    """``Psi(y, z)`` by ray inversion (no guard bands)."""
    inv = rays.invert_ray(p, (y, z))
    return psi_value(p, inv.s, inv.t)


def K_field(p: ModelParams, y: float, z: float) -> float:
    """``K(y, z)`` by ray inversion (no guard bands)."""
    inv = rays.invert_ray(p, (y, z))
    return transport_K(p, inv.s, inv.t)[0]


def log_density(p: ModelParams, y: float, z: float) -> tuple[float, str | None]:
    """Log of ``eps s K exp(psi/eps)``, the outer density ``f_k(x)``.

    The ``1/s`` in ``K`` cancels against ``Psi_y = s`` so the result is
    smooth across ``y = Y0(z)``.  Returns ``(log_density, layer_tag)``.
    """
    layer = guard_band(p, y, z)
    inv = rays.invert_ray(p, (y, z))
    core, _, _ = _amp_core(p, inv.s, inv.t)
    psi = psi_value(p, inv.s, inv.t)
    return math.log(p.eps) + psi / p.eps + math.log(math.sqrt(p.rho) / _TWO_PI * core), layer


def density(p: ModelParams, y: float, z: float) -> float:
    """Outer density ``f_k(x)`` (see :func:`log_density`)."""
    return math.exp(log_density(p, y, z)[0])
