"""Ratios of neighbouring layer approximations inside their overlap zones."""
import math

from onoff_fluid import expansion, layers as L, rays


def STIRLING(j):
    return math.sqrt(2 * math.pi * j) * (j / math.e) ** j


def _ratio(a, b):
    return math.exp(a.log_magnitude - b.log_magnitude)


def ratio_corner_blx0(p, l=8, chi=3.0):
    return _ratio(L.corner_spectral(p, l, chi), L.bl_x0(p, chi / p.N, (p.floor_c + l) / p.N))


def ratio_c01_blx0(p, j=2, x=1.0):
    return _ratio(L.corner_01(p, j, x), L.bl_x0(p, x, 1 - j / p.N))


def ratio_c01_blz1(p, j=0, x=1.0):
    return _ratio(L.corner_01(p, j, x), L.bl_z1(p, j, x / p.N))


def ratio_Y01_blz1(p, j=0, V=-2.5):
    y = rays.curve_Y0(p, 1.0) + V * math.sqrt(p.eps * rays.curve_Y2(p, 1.0))
    return _ratio(L.corner_Y01(p, j, y), L.bl_z1(p, j, y))


def local_outer(p, V, z):
    """Outer form near ``Y0`` built from the quadratic exponent and the ``K`` blow-up law."""
    Y2 = L.transition_Y2(p, z)
    Phi, kappa = expansion.phi_kappa(p, z)
    d = V * math.sqrt(p.eps * Y2)
    psi = Phi - d * d / (2 * Y2)
    K = kappa * math.sqrt(Y2) / (math.sqrt(2 * math.pi) * abs(d))
    return math.log(p.eps) + psi / p.eps + math.log(K)


def ratio_transition_outer(p, V, z=0.8):
    """Outer form over transition layer at ``V``; on the R side (``V > 0``)
    the deficits from the stationary value are compared."""
    w = math.sqrt(p.eps * L.transition_Y2(p, z))
    y = rays.curve_Y0(p, z) + V * w
    outer = local_outer(p, V, z)
    lt = L.transition_value(p, y, z).log_magnitude
    if V < 0:
        return math.exp(outer - lt)
    Ginf = expansion.log_G_inf(p, z)
    return math.exp(outer - Ginf) / -math.expm1(lt - Ginf)
