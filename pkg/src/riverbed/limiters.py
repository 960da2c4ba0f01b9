"""Slope limiters for modal SWE coefficients of shape (2, n_cells, k+1).

Both limiters work on characteristic variables of the Jacobian at the cell
average and never touch the zeroth mode.  The WENO variant reconstructs
troubled cells from the cell polynomial and its two neighbours shifted to
share the cell average, with linear weights (0.001, 0.998, 0.001).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg

from .errors import DryStateError

WENO_LINEAR_WEIGHTS = (0.001, 0.998, 0.001)
_WENO_EPS = 1e-6


def minmod(a, b, c):
    s = np.sign(a)
    same = (s == np.sign(b)) & (s == np.sign(c))
    return np.where(same, s * np.minimum(np.minimum(np.abs(a), np.abs(b)), np.abs(c)), 0.0)


def tvb_minmod(a, b, c, m_dx2):
    return np.where(np.abs(a) <= m_dx2, a, minmod(a, b, c))


def _eig(means, g):
    """Right eigenvectors of A(U) and their inverses at cell averages."""
    h = means[0]
    if np.any(h <= 0.0):
        cell = int(np.argmin(h))
        raise DryStateError(f"non-positive cell-average height in limiter (cell {cell})", cell=cell)
    u = means[1] / h
    c = np.sqrt(g * h)
    n = h.shape[0]
    R = np.empty((n, 2, 2))
    R[:, 0, 0] = 1.0
    R[:, 0, 1] = 1.0
    R[:, 1, 0] = u - c
    R[:, 1, 1] = u + c
    L = np.empty((n, 2, 2))
    L[:, 0, 0] = (u + c) / (2 * c)
    L[:, 0, 1] = -1.0 / (2 * c)
    L[:, 1, 0] = -(u - c) / (2 * c)
    L[:, 1, 1] = 1.0 / (2 * c)
    return R, L


def _to_char(L, X):
    # X: (2, n, ...) -> characteristic components using the per-cell matrix L
    return np.einsum("nab,bn...->an...", L, X)


def _troubled(W, Wm, Wp, m_dx2):
    """TVB check on characteristic coefficients.

    W: (2, n, k+1) characteristic coefficients of each cell expressed with the
    cell's own eigenvectors; Wm, Wp: neighbour averages in the same variables.
    Returns the troubled-cell mask.
    """
    mean = W[:, :, 0]
    right_dev = W.sum(-1) - mean
    sgn = (-1.0) ** np.arange(W.shape[-1])
    left_dev = mean - W @ sgn
    dp = Wp - mean
    dm = mean - Wm
    r_lim = tvb_minmod(right_dev, dp, dm, m_dx2)
    l_lim = tvb_minmod(left_dev, dp, dm, m_dx2)
    flag = (r_lim != right_dev) | (l_lim != left_dev)
    return flag.any(axis=0)


def _neighbour_means_char(L, means):
    left = np.roll(means, 1, axis=1)
    right = np.roll(means, -1, axis=1)
    return _to_char(L, left), _to_char(L, right)


def minmod_limiter(U, g, dx, tvb_m=50.0):
    k = U.shape[-1] - 1
    if k == 0:
        return U
    m_dx2 = tvb_m * dx * dx
    R, L = _eig(U[:, :, 0], g)
    W = _to_char(L, U)
    Wm, Wp = _neighbour_means_char(L, U[:, :, 0])
    flag = _troubled(W, Wm, Wp, m_dx2)
    if not flag.any():
        return U
    mean = W[:, :, 0]
    slope = minmod(W[:, :, 1], Wp - mean, mean - Wm)
    Wn = W.copy()
    Wn[:, flag, 1] = slope[:, flag]
    Wn[:, flag, 2:] = 0.0
    out = np.einsum("nab,bn...->an...", R, Wn)
    out[:, :, 0] = U[:, :, 0]
    out[:, ~flag] = U[:, ~flag]
    return out


@lru_cache(maxsize=None)
def _shift_matrix(degree: int, shift: float) -> np.ndarray:
    """Maps coefficients of p(xi + shift) to Legendre coefficients on [-1, 1]."""
    x, w = leg.leggauss(degree + 2)
    V = leg.legvander(x, degree)
    Vs = leg.legvander(x + shift, degree)
    scale = 0.5 * (2.0 * np.arange(degree + 1) + 1.0)
    S = (V * w[:, None]).T @ Vs * scale[:, None]
    S.setflags(write=False)
    return S


@lru_cache(maxsize=None)
def _smoothness_form(degree: int) -> np.ndarray:
    """Quadratic form Q with beta = c^T Q c, sum_s 2^(2s-1) int (d^s p / dxi^s)^2."""
    x, w = leg.leggauss(degree + 2)
    Q = np.zeros((degree + 1, degree + 1))
    for s in range(1, degree + 1):
        D = np.zeros((len(x), degree + 1))
        for m in range(s, degree + 1):
            c = np.zeros(degree + 1)
            c[m] = 1.0
            D[:, m] = leg.legval(x, leg.legder(c, s))
        Q += 2.0 ** (2 * s - 1) * (D * w[:, None]).T @ D
    Q.setflags(write=False)
    return Q


def weno_limiter(U, g, dx, tvb_m=50.0, linear_weights=WENO_LINEAR_WEIGHTS):
    k = U.shape[-1] - 1
    if k == 0:
        return U
    m_dx2 = tvb_m * dx * dx
    R, L = _eig(U[:, :, 0], g)
    W = _to_char(L, U)
    Wm, Wp = _neighbour_means_char(L, U[:, :, 0])
    flag = _troubled(W, Wm, Wp, m_dx2)
    if not flag.any():
        return U
    idx = np.nonzero(flag)[0]
    n = U.shape[1]
    Lf = L[idx]
    # neighbour polynomials in the troubled cell's characteristic variables
    PL = _to_char(Lf, U[:, (idx - 1) % n])
    PR = _to_char(Lf, U[:, (idx + 1) % n])
    P0 = W[:, idx]
    # a point xi of cell j sits at xi + 2 in the left neighbour's coordinates
    PL = PL @ _shift_matrix(k, 2.0).T
    PR = PR @ _shift_matrix(k, -2.0).T
    mean = P0[:, :, 0]
    PL[:, :, 0] = mean
    PR[:, :, 0] = mean
    Q = _smoothness_form(k)
    cands = np.stack([PL, P0, PR])  # (3, 2, m, k+1)
    beta = np.einsum("...i,ij,...j->...", cands, Q, cands)
    gam = np.asarray(linear_weights).reshape(3, 1, 1)
    wt = gam / (_WENO_EPS + beta) ** 2
    wt /= wt.sum(axis=0, keepdims=True)
    Pn = np.einsum("lcm,lcmk->cmk", wt, cands)
    Pn[:, :, 0] = mean
    out = U.copy()
    out[:, idx] = np.einsum("nab,bnk->ank", R[idx], Pn)
    out[:, idx, 0] = U[:, idx, 0]
    return out


def apply_limiter(U, kind, g, dx, tvb_m=50.0):
    """Dispatch on ``kind`` in {None, 'none', 'minmod', 'weno'}."""
    if kind in (None, "none"):
        return U
    if kind in ("minmod", "minmod_tvb"):
        return minmod_limiter(U, g, dx, tvb_m)
    if kind == "weno":
        return weno_limiter(U, g, dx, tvb_m)
    raise ValueError(f"unknown limiter {kind!r}")
