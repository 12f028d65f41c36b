"""Exact stationary distribution by eigen-decomposition.

The vector ``F(x) = (F_0(x), ..., F_N(x))`` with ``F_k(x) = Pr[X <= x, Z = k]``
solves ``D F' = M F`` where ``D = diag(k - c)`` and ``M`` is the (transposed)
generator of the number of on sources.  Bounded solutions are

    F(x) = p + sum_{xi_i < 0} b_i exp(xi_i x) v_i,

with ``p`` the binomial weights, ``(xi_i, v_i)`` the eigenpairs of
``D^{-1} M`` and ``b`` fixed by ``F_k(0) = 0`` for ``k > floor(c)``.

Numerics
--------
* The eigenproblem is solved in the balanced form
  ``S^{-1} D^{-1} M S`` with ``S = diag(sqrt(p_k/|k-c|))``, whose entries
  are ``O(N)`` while the raw eigenvector entries span hundreds of decades.
* Eigenvector entries far below the largest one are rebuilt from the
  three-term recurrence ``(M - xi D) v = 0``, run inwards from ``k = 0``
  and ``k = N`` where it is stable, and kept in log form.
* Deficits ``p_k - F_k(x)`` and ``M(x) = 1 - sum_k F_k(x)`` are summed
  directly from the modes; ``F_k(x)`` is never formed by subtracting two
  nearly equal numbers unless it is itself requested.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import ComplexSpectrum, DomainError, EigenCountMismatch, SingularBCSystem
from .model import ModelParams

MAX_N = 2000
IMAG_TOL = 1e-9
REFINE_THRESH = 1e-3
COND_WARN = 1e10


def log_binomial_weights(p: ModelParams) -> np.ndarray:
    """``log p_k`` for the stationary binomial law of the number of on sources."""
    k = np.arange(p.N + 1, dtype=float)
    return (gammaln(p.N + 1.0) - gammaln(k + 1.0) - gammaln(p.N - k + 1.0)
            + k * math.log(p.lam) - p.N * math.log1p(p.lam))


def generator_matrix(p: ModelParams) -> np.ndarray:
    """Tridiagonal ``M`` with sub/diag/super ``lam(N-k+1)``, ``-(lam(N-k)+k)``, ``k+1``."""
    N, lam = p.N, p.lam
    k = np.arange(N + 1, dtype=float)
    return (np.diag(-(lam * (N - k) + k)) + np.diag(lam * (N - k[:-1]), -1)
            + np.diag(k[1:], 1))


def _refine_tails(p: ModelParams, xi: np.ndarray, logv: np.ndarray, sgn: np.ndarray,
                  thresh: float = REFINE_THRESH) -> None:
    """Rebuild small eigenvector entries from the recurrence, in place.

    Row ``k`` of ``(M - xi D) v = 0`` reads
    ``lam(N-k+1) v_{k-1} - a_k v_k + (k+1) v_{k+1} = 0`` with
    ``a_k = lam(N-k) + k + xi (k - c)``.  Ratios ``v_k/v_{k-1}`` are
    propagated from ``k = 0`` and ``v_{k-1}/v_k`` from ``k = N``.
    """
    N, lam, c = p.N, p.lam, p.c
    n = xi.size
    k = np.arange(N + 1, dtype=float)
    a = lam * (N - k)[None, :] + k[None, :] + xi[:, None] * (k - c)[None, :]
    top = logv.max(axis=1)
    big = logv > (top + math.log(thresh))[:, None]
    k1 = np.argmax(big, axis=1)
    k2 = N - np.argmax(big[:, ::-1], axis=1)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # forward from k = 0
        lf = np.zeros((n, N + 1))
        sf = np.ones((n, N + 1))
        r = a[:, 0].copy()
        for j in range(1, N + 1):
            if j > 1:
                r = (a[:, j - 1] - lam * (N - j + 2) / r) / j
            lf[:, j] = lf[:, j - 1] + np.log(np.abs(r))
            sf[:, j] = sf[:, j - 1] * np.sign(r)
        # backward from k = N
        lb = np.zeros((n, N + 1))
        sb = np.ones((n, N + 1))
        R = a[:, N] / lam
        for j in range(N, 0, -1):
            if j < N:
                R = (a[:, j] - (j + 1) / R) / (lam * (N - j + 1))
            lb[:, j - 1] = lb[:, j] + np.log(np.abs(R))
            sb[:, j - 1] = sb[:, j] * np.sign(R)

    rows = np.arange(n)
    for i in rows:
        a1 = int(k1[i])
        if a1 > 1:
            shift = logv[i, a1] - lf[i, a1]
            flip = sgn[i, a1] * sf[i, a1]
            logv[i, :a1] = lf[i, :a1] + shift
            sgn[i, :a1] = sf[i, :a1] * flip
        a2 = int(k2[i])
        if a2 < N - 1:
            shift = logv[i, a2] - lb[i, a2]
            flip = sgn[i, a2] * sb[i, a2]
            logv[i, a2 + 1:] = lb[i, a2 + 1:] + shift
            sgn[i, a2 + 1:] = sb[i, a2 + 1:] * flip


@dataclass(frozen=True)
class StationaryTable:
    """Exact solution on a grid plus the spectral data to evaluate it anywhere.

    Attributes
    ----------
    x_grid : (nx,) array
    F : (N+1, nx) array, ``F[k, i] = F_k(x_grid[i])``
    F_inf : (N+1,) binomial weights
    eigvals : retained eigenvalues, ``0`` first then the negative ones
    coeffs : ``b_i`` for the negative eigenvalues, with every mode vector
        scaled so that its largest entry has magnitude one
    cond : condition number of the boundary system
    """

    params: ModelParams
    x_grid: np.ndarray
    F: np.ndarray
    F_inf: np.ndarray
    eigvals: np.ndarray
    coeffs: np.ndarray
    cond: float
    all_eigvals: np.ndarray = field(repr=False)
    log_modes: np.ndarray = field(repr=False)
    sign_modes: np.ndarray = field(repr=False)
    log_b: np.ndarray = field(repr=False)
    sign_b: np.ndarray = field(repr=False)
    mode_sums: np.ndarray = field(repr=False)

    @property
    def neg_eigvals(self) -> np.ndarray:
        return self.eigvals[1:]

    def _terms(self, x: float) -> tuple[np.ndarray, np.ndarray]:
        lt = self.log_modes + (self.log_b + self.neg_eigvals * x)[:, None]
        st = self.sign_modes * self.sign_b[:, None]
        return lt, st

    def deficit(self, x: float, with_error: bool = False):
        """``p_k - F_k(x) = Pr[X > x, Z = k]`` for every ``k``.

        With ``with_error`` also returns a rounding bound per entry,
        ``64 eps_mach sum_i |term_i|``.
        """
        if not x >= 0.0:
            raise DomainError("x must be nonnegative")
        lt, st = self._terms(x)
        mx = lt.max(axis=0)
        with np.errstate(invalid="ignore"):
            w = np.exp(lt - mx)
            val = -(st * w).sum(axis=0) * np.exp(mx)
            err = 64.0 * np.finfo(float).eps * w.sum(axis=0) * np.exp(mx)
        return (val, err) if with_error else val

    def F_at(self, x: float) -> np.ndarray:
        """``F_k(x)`` for every ``k`` (exactly zero above ``floor(c)`` at ``x=0``)."""
        out = self.F_inf - self.deficit(x)
        if x == 0.0:
            out[self.params.floor_c + 1:] = 0.0
        return out

    def F_prime(self, x: float) -> np.ndarray:
        """Analytic derivative ``dF_k/dx`` of the spectral form."""
        lt, st = self._terms(x)
        return (st * np.exp(lt) * self.neg_eigvals[:, None]).sum(axis=0)

    def marginal(self, x: float) -> float:
        """``M(x) = Pr[X > x]`` (see :func:`marginal_exact`)."""
        return marginal_exact(self, x)


def _column_normalise(logv: np.ndarray) -> np.ndarray:
    return logv - logv.max(axis=1, keepdims=True)


def solve_stationary(p: ModelParams, x_grid=(0.0,), *, refine: bool = True) -> StationaryTable:
    """Solve the stationary equations exactly (up to rounding).

    Raises
    ------
    EigenCountMismatch
        If the number of negative eigenvalues differs from ``N - floor(c)``.
    ComplexSpectrum
        If an eigenvalue has imaginary part above ``1e-9`` (scaled).
    SingularBCSystem
        If the boundary system is singular.
    """
    N = p.N
    if N > MAX_N:
        raise DomainError(f"N={N} exceeds the dense solver budget {MAX_N}")
    x_grid = np.asarray(x_grid, dtype=float).ravel()
    if x_grid.size == 0 or np.any(~np.isfinite(x_grid)) or np.any(x_grid < 0):
        raise DomainError("x_grid must be finite and nonnegative")
    if np.any(np.diff(x_grid) < 0):
        raise DomainError("x_grid must be sorted")

    k = np.arange(N + 1, dtype=float)
    d = k - p.c
    logp = log_binomial_weights(p)
    log_s = 0.5 * logp - 0.5 * np.log(np.abs(d))
    M = generator_matrix(p)
    # S^{-1} D^{-1} M S, entries formed in log space to avoid overflow
    A = np.zeros_like(M)
    for off in (-1, 0, 1):
        rows = np.arange(max(0, -off), N + 1 - max(0, off))
        cols = rows + off
        A[rows, cols] = M[rows, cols] * np.exp(log_s[cols] - log_s[rows]) / d[rows]
    w, U = np.linalg.eig(A)
    scale = max(1.0, float(np.abs(w).max()))
    if np.abs(w.imag).max() > IMAG_TOL * scale:
        raise ComplexSpectrum(f"max |Im xi| = {np.abs(w.imag).max():.3e}")
    w = w.real
    U = U.real
    i0 = int(np.argmin(np.abs(w)))
    if abs(w[i0]) > 1e-8 * scale:
        raise EigenCountMismatch(f"no zero eigenvalue (closest {w[i0]:.3e})")
    neg = np.array([i for i in np.argsort(w) if w[i] < 0 and i != i0], dtype=int)
    n_expected = N - p.floor_c
    if neg.size != n_expected:
        raise EigenCountMismatch(f"{neg.size} negative eigenvalues, expected {n_expected}")
    xi = w[neg]

    with np.errstate(divide="ignore"):
        logv = np.log(np.abs(U[:, neg].T)) + log_s[None, :]
    sgn = np.sign(U[:, neg].T)
    sgn[sgn == 0] = 1.0
    if refine:
        _refine_tails(p, xi, logv, sgn)
    logv = _column_normalise(logv)

    # boundary rows k > floor(c), each divided by sqrt(p_k)
    rows = np.arange(p.floor_c + 1, N + 1)
    B = sgn[:, rows].T * np.exp(logv[:, rows].T - 0.5 * logp[rows][:, None])
    rhs = -np.exp(0.5 * logp[rows])
    try:
        b = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularBCSystem(str(exc)) from exc
    cond = float(np.linalg.cond(B))
    if not np.all(np.isfinite(b)):
        raise SingularBCSystem("non-finite boundary coefficients")
    if cond > COND_WARN:
        warnings.warn(f"boundary system condition number {cond:.2e}", RuntimeWarning,
                      stacklevel=2)
    with np.errstate(divide="ignore"):
        log_b = np.log(np.abs(b))
    sign_b = np.where(b < 0, -1.0, 1.0)
    mode_sums = (sgn * np.exp(logv)).sum(axis=1)

    tab = StationaryTable(
        params=p, x_grid=x_grid, F=np.empty((N + 1, 0)), F_inf=np.exp(logp),
        eigvals=np.concatenate([[0.0], xi]), coeffs=b, cond=cond,
        all_eigvals=np.sort(w), log_modes=logv, sign_modes=sgn, log_b=log_b,
        sign_b=sign_b, mode_sums=mode_sums)
    F = np.column_stack([tab.F_at(float(x)) for x in x_grid])
    object.__setattr__(tab, "F", F)
    return tab


def marginal_exact(table: StationaryTable, x: float) -> float:
    """``M(x) = 1 - sum_k F_k(x)``, summed mode by mode from the spectral form."""
    if not x >= 0.0:
        raise DomainError("x must be nonnegative")
    if math.isinf(x):
        return 0.0
    t = table.sign_b * table.mode_sums * np.exp(table.log_b + table.neg_eigvals * x)
    return float(-math.fsum(t))


def eigen_residuals(table: StationaryTable) -> np.ndarray:
    """``||D^{-1} M v - xi v||_inf / ||v||_inf`` for every retained mode."""
    p = table.params
    M = generator_matrix(p)
    d = np.arange(p.N + 1) - p.c
    V = table.sign_modes * np.exp(table.log_modes)
    R = (V @ M.T) / d[None, :] - table.neg_eigvals[:, None] * V
    return np.abs(R).max(axis=1) / np.abs(V).max(axis=1)


def zero_mode_residual(table: StationaryTable) -> float:
    """``||D^{-1} M p||_inf / ||p||_inf``: the binomial weights span the kernel."""
    p = table.params
    M = generator_matrix(p)
    d = np.arange(p.N + 1) - p.c
    return float(np.abs((M @ table.F_inf) / d).max() / table.F_inf.max())


def bc_residual(table: StationaryTable) -> float:
    """Largest ``|F_k(0)|`` over ``k > floor(c)``, from the deficit form."""
    p = table.params
    F0 = table.F_inf - table.deficit(0.0)
    return float(np.abs(F0[p.floor_c + 1:]).max())


def ode_residual(table: StationaryTable, x: float) -> float:
    """``max_k |(k - c) F_k'(x) - (M F(x))_k|`` with the analytic derivative."""
    p = table.params
    M = generator_matrix(p)
    d = np.arange(p.N + 1) - p.c
    F = table.F_inf - table.deficit(x)
    return float(np.abs(d * table.F_prime(x) - M @ F).max())
