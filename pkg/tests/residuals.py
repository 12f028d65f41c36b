"""Finite-difference residuals of the eikonal and transport equations."""
import math

import numpy as np

from onoff_fluid import expansion, rays

H1 = 1e-5   # first derivatives
H2 = 1e-3   # second derivative; smaller steps amplify rounding in Psi


def _d1(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _d2(f, x, h):
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def eikonal_transport(p, y, z):
    """``(|eikonal residual|, transport residual / largest transport term)``."""
    Psi = lambda a, b: expansion.Psi(p, a, b)
    K = lambda a, b: expansion.K_field(p, a, b)
    Py = _d1(lambda a: Psi(a, z), y, H1)
    Pz = _d1(lambda b: Psi(y, b), z, H1)
    Pzz = _d2(lambda b: Psi(y, b), z, H2)
    U = math.exp(Pz)
    lam, g = p.lam, p.gamma
    eik = (z - g) * Py + (1 - lam) * z + lam + lam * (z - 1) / U - z * U
    k0 = K(y, z)
    Ky = _d1(lambda a: K(a, z), y, H1)
    Kz = _d1(lambda b: K(y, b), z, H1)
    terms = [((1 + z / 2 * Pzz) * U + lam * (1 + Pzz / 2 - z / 2 * Pzz) / U) * k0,
             (g - z) * Ky,
             (z * U + lam * (z - 1) / U) * Kz]
    return abs(eik), abs(sum(terms)) / max(abs(t) for t in terms)


def grid_R(p, n=10):
    """Region ``R``: heights 0.02 to 0.15 above ``Y0`` (or above 0 for ``z < gamma``)."""
    pts = []
    for z in np.linspace(0.1, 0.95, n):
        base = rays.curve_Y0(p, z) if z > p.gamma else 0.0
        pts += [(base + d, z) for d in np.linspace(0.02, 0.15, n)]
    return pts


def grid_RC(p, n=10):
    """Shadow region: 20% to 80% of ``Y0(z)`` for ``z`` between ``gamma + 0.045`` and 0.95."""
    return [(f * rays.curve_Y0(p, z), z)
            for z in np.linspace(p.gamma + 0.045, 0.95, n) for f in np.linspace(0.2, 0.8, n)]
