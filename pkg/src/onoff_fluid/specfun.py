"""Special functions for the layer formulas.

Integer-order Bessel functions are evaluated by Miller's downward
recurrence, vectorised over arguments and carried in rescaled form so that
orders in the thousands (needed by the corner spectral series) neither
overflow nor underflow.  The gamma function delegates to :mod:`math`.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import PoleError, RangeError

# power of two, so rescaling is exact
_RESCALE = 2.0**830
_LOG_RESCALE = 830 * math.log(2.0)


def _miller_top(n, x):
    """Starting order of the downward sweep, per column (even)."""
    top = (np.maximum(n, x) + 60 + 10.0 * np.cbrt(np.maximum(x, 1.0))).astype(np.int64)
    return top + (top % 2)


def log_bessel_j(n, x) -> tuple[np.ndarray, np.ndarray]:
    """``log|J_n(x)|`` and ``sign(J_n(x))`` for ``n >= 0`` and ``x > 0``.

    Parameters
    ----------
    n : array_like of int
        Nonnegative orders.
    x : array_like of float
        Positive arguments, broadcast against ``n``.

    Notes
    -----
    A single downward sweep serves every argument; each column joins the
    sweep at its own starting order and keeps its own log scale.  The
    normalisation uses ``J_0 + 2 sum_k J_2k = 1``.
    """
    n, x = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(x, dtype=float))
    shape = n.shape
    n = n.ravel().copy()
    x = x.ravel().copy()
    if np.any(n < 0):
        raise RangeError("log_bessel_j needs nonnegative orders")
    if np.any(~(x > 0)):
        raise RangeError("log_bessel_j needs positive arguments")
    out_log = np.empty(n.size)
    out_sign = np.empty(n.size)

    small = x < 1e-6
    if small.any():
        # two-term power series, relative error below 1e-24
        ns, xs = n[small], x[small]
        h2 = (0.5 * xs) ** 2
        lg = np.array([math.lgamma(k + 1.0) for k in ns])
        out_log[small] = ns * np.log(0.5 * xs) - lg + np.log1p(-h2 / (ns + 1.0))
        out_sign[small] = 1.0
    big = ~small
    if big.any():
        nb, xb = n[big], x[big]
        col_top = _miller_top(nb, xb)
        top = int(col_top.max())
        # bucket the targets by order so the sweep only touches hits
        order_idx = np.argsort(nb, kind="stable")
        sorted_n = nb[order_idx]
        cur = np.zeros(xb.size)
        nxt = np.zeros(xb.size)
        scale = np.zeros(xb.size)
        norm = np.zeros(xb.size)
        tlog = np.empty(xb.size)
        tsign = np.empty(xb.size)
        inv2x = 2.0 / xb
        ptr = sorted_n.size - 1
        for k in range(top, -1, -1):
            start = col_top == k
            if start.any():
                cur[start] = 1e-300
            while ptr >= 0 and sorted_n[ptr] == k:
                i = order_idx[ptr]
                tlog[i] = math.log(abs(cur[i])) + scale[i] if cur[i] != 0 else -math.inf
                tsign[i] = 1.0 if cur[i] >= 0 else -1.0
                ptr -= 1
            if k % 2 == 0:
                norm += (2.0 if k else 1.0) * cur
            if k == 0:
                break
            prev = (k * inv2x) * cur - nxt
            nxt = cur
            cur = prev
            huge = np.abs(cur) > _RESCALE
            if huge.any():
                cur[huge] /= _RESCALE
                nxt[huge] /= _RESCALE
                norm[huge] /= _RESCALE
                scale[huge] += _LOG_RESCALE
        out_log[big] = tlog - (np.log(np.abs(norm)) + scale)
        out_sign[big] = tsign * np.sign(norm)
    return out_log.reshape(shape), out_sign.reshape(shape)


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind of integer order.

    Uses ``J_{-n}(x) = (-1)^n J_n(x)`` and ``J_n(-x) = (-1)^n J_n(x)``.

    Raises
    ------
    RangeError
        If ``|n| > 500`` or ``|x| > 1e4``.
    """
    n = int(n)
    x = float(x)
    if abs(n) > 500 or abs(x) > 1e4:
        raise RangeError(f"bessel_j supports |n|<=500, |x|<=1e4; got n={n}, x={x}")
    sign = 1.0
    if n < 0:
        n = -n
        sign *= -1.0 if n % 2 else 1.0
    if x < 0:
        x = -x
        sign *= -1.0 if n % 2 else 1.0
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    lj, sj = log_bessel_j(n, x)
    return sign * float(sj) * math.exp(float(lj))


def bessel_j_signed(order: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log magnitude and sign of ``J_order(x)`` for integer orders of any sign
    and real ``x != 0``, vectorised."""
    order = np.asarray(order, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    order, x = np.broadcast_arrays(order, x)
    n = np.abs(order)
    odd = (n % 2) == 1
    sign = np.ones(order.shape)
    sign = np.where(odd & (order < 0), -sign, sign)
    sign = np.where(odd & (x < 0), -sign, sign)
    lj, sj = log_bessel_j(n, np.abs(x))
    return lj, sj * sign


def gamma_fn(x: float) -> float:
    """Gamma function; raises :class:`PoleError` at nonpositive integers."""
    x = float(x)
    if x <= 0 and abs(x - round(x)) < 1e-12:
        raise PoleError(f"gamma pole at {x}")
    return math.gamma(x)


def log_gamma(x: float) -> float:
    """``log|Gamma(x)|`` without overflow."""
    x = float(x)
    if x <= 0 and abs(x - round(x)) < 1e-12:
        raise PoleError(f"gamma pole at {x}")
    return math.lgamma(x)
