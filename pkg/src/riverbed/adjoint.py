"""Backward DG solve of the continuous adjoint system.

The adjoint PDE is solved in conservative form

    d_t sigma + d_x(A^T sigma) = (d_x A^T - S^T) sigma,   sigma(x, T) = 0,

integrated in reversed time tau = T - t with SSP-RK3 and a Lax-Friedrichs
flux whose dissipation acts in the tau direction.  The forward state enters
through its own DG representation sampled at the adjoint quadrature points
and interfaces, linearly interpolated between stored forward levels.

Two closures for the boundary data are provided:

``"dirichlet"``
    the exterior traces at x0 / xL are -A^-T E(x0) and +A^-T E(xL).
``"periodic_jump"``
    x0 and xL are the same point of a periodic domain; the cells on either
    side are coupled through the jump condition
    A^T sigma(xL) - A^T sigma(x0) = E(x0) + E(xL).
    This is the closure that matches a periodic forward problem and is the
    default for periodic cases.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as leg

from .errors import DryStateError, SingularBoundaryError
from .forward import GRAVITY, BoundaryTrace, SolverConfig, Trajectory, max_wavespeed
from .mesh import Mesh1D, PiecewiseField, QuadratureRule, basis_at, project

CLOSURES = ("periodic_jump", "dirichlet")
CRITICAL_TOLERANCE = 1e-10


@dataclass
class MisfitTrace:
    """E = Lambda(B(p)) - measured, per time and boundary; arrays of shape (n, 2)."""

    times: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @classmethod
    def from_traces(cls, trace: BoundaryTrace, measured: BoundaryTrace) -> "MisfitTrace":
        if len(trace.times) != len(measured.times) or not np.allclose(trace.times, measured.times, rtol=0, atol=1e-14):
            raise ValueError("misfit needs traces on the same time grid")
        return cls(trace.times.copy(), trace.left - measured.left, trace.right - measured.right)

    def scaled(self, c: float) -> "MisfitTrace":
        return MisfitTrace(self.times, c * self.left, c * self.right)

    def __add__(self, other: "MisfitTrace") -> "MisfitTrace":
        return MisfitTrace(self.times, self.left + other.left, self.right + other.right)

    def at(self, t):
        tt = self.times
        if len(tt) == 1:
            return self.left[0], self.right[0]
        left = np.array([np.interp(t, tt, self.left[:, i]) for i in range(2)])
        right = np.array([np.interp(t, tt, self.right[:, i]) for i in range(2)])
        return left, right


@dataclass
class AdjointState:
    sigma1: PiecewiseField
    sigma2: PiecewiseField


@dataclass
class AdjointTrajectory:
    mesh: Mesh1D
    times: np.ndarray  # ascending
    coeffs: np.ndarray  # (n_levels, 2, n_cells, k+1)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    def state(self, i: int) -> AdjointState:
        return AdjointState(PiecewiseField(self.mesh, self.coeffs[i, 0]), PiecewiseField(self.mesh, self.coeffs[i, 1]))

    def coeffs_at(self, t) -> np.ndarray:
        """Linear-in-time interpolation of the coefficients, shape (len(t), 2, n, k+1)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i, w = _interp_index(self.times, t)
        if len(self.times) == 1:
            return np.repeat(self.coeffs[:1], len(t), axis=0)
        w = w[:, None, None, None]
        return (1 - w) * self.coeffs[i] + w * self.coeffs[i + 1]


def _interp_index(tt, t):
    tol = 1e-12 * max(1.0, abs(tt[-1]))
    if np.any(t < tt[0] - tol) or np.any(t > tt[-1] + tol):
        raise ValueError("time outside the stored trajectory")
    if len(tt) == 1:
        return np.zeros(len(t), int), np.zeros(len(t))
    i = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, len(tt) - 2)
    w = np.clip((t - tt[i]) / (tt[i + 1] - tt[i]), 0.0, 1.0)
    return i, w


# ---------------------------------------------------------------------------
# pointwise pieces


def adjoint_coefficients(h, hu, bottom_slope, g=GRAVITY):
    """A^T, S^T and C^T of the SWE adjoint at one point."""
    if h <= 0:
        raise DryStateError("adjoint coefficients at a dry state")
    u = hu / h
    AT = np.array([[0.0, g * h - u * u], [1.0, 2.0 * u]])
    ST = np.array([[0.0, -g * bottom_slope], [0.0, 0.0]])
    CT = np.zeros((2, 2))
    return AT, ST, CT


def _inv_AT_apply(h, hu, E, g, time=None):
    """(A^T)^-1 E for arrays of states; raises near critical flow."""
    u = hu / h
    det = u * u - g * h
    if np.any(np.abs(det) < CRITICAL_TOLERANCE):
        raise SingularBoundaryError(f"critical flow at the boundary (t={time})", time)
    # inverse of [[0, gh-u^2], [1, 2u]] is [[2u, u^2-gh], [-1, 0]] / det ... scaled
    return np.stack([(2.0 * u * E[0] + det * E[1]) / det, -E[0] / det])


def adjoint_boundary_values(E, boundary_state, g=GRAVITY, side="left", time=None):
    """-(A^T)^-1 E at x0 (``side='left'``) and +(A^T)^-1 E at xL."""
    h, hu = boundary_state
    v = _inv_AT_apply(np.asarray(h, float), np.asarray(hu, float), np.asarray(E, float), g, time)
    if side == "left":
        return -v
    if side == "right":
        return v
    raise ValueError("side must be 'left' or 'right'")


# ---------------------------------------------------------------------------
# forward data sampled for the adjoint mesh


class ForwardSampler:
    """Forward state at the adjoint quadrature points and interfaces for every level."""

    def __init__(self, traj: Trajectory, mesh: Mesh1D, quad: QuadratureRule):
        self.traj = traj
        self.times = traj.times
        fm = traj.mesh
        xq = mesh.physical(quad.nodes)
        self.Uq, self.dUq = self._sample(xq.ravel(), side=1, deriv=True)
        self.Uq = self.Uq.reshape(len(self.times), 2, mesh.n_cells, -1)
        self.dUq = self.dUq.reshape(self.Uq.shape)
        faces = mesh.edges[1:]
        self.Ufm, _ = self._sample(faces, side=-1)
        inner = faces.copy()
        inner[-1] = fm.x0  # right limit at xL wraps to x0 for the periodic forward
        self.Ufp, _ = self._sample(inner, side=1)
        sgn = (-1.0) ** np.arange(traj.degree + 1)
        self.left = traj.coeffs[:, :, 0, :] @ sgn
        self.right = traj.coeffs[:, :, -1, :].sum(-1)

    def _sample(self, x, side, deriv=False):
        fm = self.traj.mesh
        cell, xi = fm.locate(x, side)
        k = self.traj.degree
        V = leg.legvander(xi, k)
        c = self.traj.coeffs[:, :, cell, :]
        vals = np.einsum("lvpk,pk->lvp", c, V)
        if not deriv:
            return vals, None
        dV = np.zeros_like(V)
        for m in range(1, k + 1):
            e = np.zeros(k + 1)
            e[m] = 1.0
            dV[:, m] = leg.legval(xi, leg.legder(e))
        return vals, np.einsum("lvpk,pk->lvp", c, dV) * (2.0 / fm.dx)

    def at(self, t):
        i, w = _interp_index(self.times, np.array([t]))
        i, w = int(i[0]), float(w[0])
        out = []
        for a in (self.Uq, self.dUq, self.Ufm, self.Ufp, self.left, self.right):
            if len(self.times) == 1:
                out.append(a[0])
            else:
                out.append((1 - w) * a[i] + w * a[i + 1])
        return out


# ---------------------------------------------------------------------------
# DG operator in reversed time


class _Tables:
    def __init__(self, mesh, k, n_quad):
        self.mesh = mesh
        self.k = k
        self.quad = QuadratureRule.gauss(n_quad or k + 2)
        V, dV = basis_at(self.quad.nodes, k)
        self.V = V
        self.Vw = V * self.quad.weights[:, None]
        self.dVw = dV * self.quad.weights[:, None]
        self.sgn = (-1.0) ** np.arange(k + 1)
        self.two_m1 = 2.0 * np.arange(k + 1) + 1.0


class _AdjointOperator(_Tables):
    def __init__(self, cfg: SolverConfig, traj: Trajectory, bottom, p, closure, g, n_quad=None):
        if closure not in CLOSURES:
            raise ValueError(f"unknown adjoint closure {closure!r}")
        _Tables.__init__(self, cfg.mesh, cfg.degree, n_quad)
        quad, V = self.quad, self.V
        self.fw = ForwardSampler(traj, self.mesh, quad)
        self.B0 = project(bottom.db0, self.mesh, self.k, quad).coeffs @ V.T
        self.B1 = project(bottom.db1, self.mesh, self.k, quad).coeffs @ V.T
        self.p = p
        self.closure = closure
        self.g = g
        self.traj = traj

    def rhs(self, S, t, misfit: MisfitTrace):
        g = self.g
        Uq, dUq, Ufm, Ufp, bl, br = self.fw.at(t)
        B = self.B0 + float(self.p(t)) * self.B1
        sl = S @ self.sgn
        sr = S.sum(-1)
        E0, EL = misfit.at(t)
        if self.closure == "dirichlet":
            ext_left = adjoint_boundary_values(E0, bl, g, "left", t)
            ext_right = adjoint_boundary_values(EL, br, g, "right", t)
            A_left, A_right = bl, br
        else:
            J = E0 + EL
            ext_left = sr[:, -1] - _inv_AT_apply(br[0], br[1], J, g, t)
            ext_right = sl[:, 0] + _inv_AT_apply(bl[0], bl[1], J, g, t)
            A_left, A_right = br, bl
        return _assemble(S, self, Uq, dUq, Ufm, Ufp, bl, B, self.traj.alpha_at(t), g,
                         ext_left, A_left, ext_right, A_right)


def _assemble(S, tab, Uq, dUq, Ufm, Ufp, bl, B, alpha, g, ext_left, A_left, ext_right, A_right):
    """DG residual in tau for the adjoint; ``tab`` carries basis tables and the mesh."""
    dx = tab.mesh.dx
    s1, s2 = S @ tab.V.T
    h, hu = Uq
    u = hu / h
    hx, hux = dUq
    ux = (hux - u * hx) / h
    # tau-flux is -A^T sigma
    f = np.empty((2,) + s1.shape)
    f[0] = -(g * h - u * u) * s2
    f[1] = -(s1 + 2.0 * u * s2)
    res = f @ tab.dVw
    src = np.empty_like(f)
    src[0] = (-g * B - (g * hx - 2.0 * u * ux)) * s2
    src[1] = -2.0 * ux * s2
    res += 0.5 * dx * (src @ tab.Vw)

    sl = S @ tab.sgn
    sr = S.sum(-1)
    # faces j+1/2, j = 0..n-1: minus side is cell j, plus side cell j+1
    sp = np.empty_like(sr)
    sp[:, :-1] = sl[:, 1:]
    sp[:, -1] = ext_right
    Ap = Ufp.copy()
    Ap[:, -1] = A_right
    Fr = 0.5 * (_flux(sr, Ufm, g) + _flux(sp, Ap, g) - alpha * (sp - sr))
    Fl = np.empty_like(Fr)
    Fl[:, 1:] = Fr[:, :-1]
    Fl[:, 0] = 0.5 * (
        _flux(np.asarray(ext_left)[:, None], np.asarray(A_left)[:, None], g)[:, 0]
        + _flux(sl[:, :1], np.asarray(bl)[:, None], g)[:, 0]
        - alpha * (sl[:, 0] - ext_left)
    )
    res += -Fr[..., None] + Fl[..., None] * tab.sgn
    res *= tab.two_m1 / dx
    return res


def adjoint_rhs(sigma: AdjointState, forward_state, bottom_slope: PiecewiseField, g=GRAVITY,
                boundary_values=None, alpha=None) -> AdjointState:
    """Residual d sigma / d tau at one instant with prescribed exterior traces.

    ``forward_state`` may live on a different mesh; it is sampled at this
    mesh's quadrature points.  ``boundary_values`` = (left, right) exterior
    traces of sigma at x0 and xL, zero by default.  ``alpha`` defaults to the
    forward state's own wave-speed bound.
    """
    mesh = sigma.sigma1.mesh
    k = sigma.sigma1.degree
    S = np.stack([sigma.sigma1.coeffs, sigma.sigma2.coeffs])
    traj = Trajectory(forward_state.mesh, np.array([0.0]), forward_state.coeffs[None],
                      np.array([max_wavespeed(forward_state, g)]))
    tab = _Tables(mesh, k, None)
    fw = ForwardSampler(traj, mesh, tab.quad)
    Uq, dUq, Ufm, Ufp, bl, br = fw.at(0.0)
    if bottom_slope.mesh != mesh or bottom_slope.degree != k:
        raise ValueError("bottom slope must share the adjoint mesh and degree")
    B = bottom_slope.coeffs @ tab.V.T
    if boundary_values is None:
        boundary_values = (np.zeros(2), np.zeros(2))
    left, right = (np.asarray(v, dtype=float) for v in boundary_values)
    a = traj.alphas[0] if alpha is None else alpha
    res = _assemble(S, tab, Uq, dUq, Ufm, Ufp, bl, B, a, g, left, bl, right, br)
    return AdjointState(PiecewiseField(mesh, res[0]), PiecewiseField(mesh, res[1]))


def _flux(sig, U, g):
    """tau-direction flux -A(U)^T sigma for arrays of shape (2, n)."""
    h, hu = U
    u = hu / h
    return np.stack([-(g * h - u * u) * sig[1], -(sig[0] + 2.0 * u * sig[1])])


def default_closure(traj: Trajectory) -> str:
    return "periodic_jump" if traj.mesh.periodic else "dirichlet"


def solve_adjoint(
    trajectory: Trajectory,
    misfit: MisfitTrace,
    cfg: SolverConfig,
    bottom,
    p,
    g: float | None = None,
    closure: str | None = None,
    n_quad: int | None = None,
    final_state: AdjointState | None = None,
) -> AdjointTrajectory:
    """March sigma from sigma(T) = 0 back to t = 0 on the adjoint mesh.

    ``cfg`` supplies the adjoint mesh, degree and CFL number; the wave-speed
    bound is the forward solver's at the same time.  ``final_state`` replaces
    the zero final condition (used for manufactured-solution checks).
    """
    g = cfg.gravity if g is None else g
    closure = closure or default_closure(trajectory)
    op = _AdjointOperator(cfg, trajectory, bottom, p, closure, g, n_quad)
    T = float(trajectory.times[-1])
    dx = op.mesh.dx
    cfl = cfg.cfl_number
    S = np.zeros((2, op.mesh.n_cells, op.k + 1))
    if final_state is not None:
        S = np.stack([final_state.sigma1.coeffs, final_state.sigma2.coeffs]).astype(float)
        if S.shape != (2, op.mesh.n_cells, op.k + 1):
            raise ValueError("final state does not match the adjoint configuration")
    levels = [S]
    times = [T]
    t = T
    while t > T * 1e-14 and T > 0:
        dt = cfl * dx / trajectory.alpha_at(t)
        last = t - dt <= T * 1e-12
        if last:
            dt = t
        # tau stages at t, t - dt, t - dt/2
        S1 = S + dt * op.rhs(S, t, misfit)
        S2 = 0.75 * S + 0.25 * (S1 + dt * op.rhs(S1, t - dt, misfit))
        S = S / 3.0 + (2.0 / 3.0) * (S2 + dt * op.rhs(S2, max(t - 0.5 * dt, 0.0), misfit))
        t = 0.0 if last else t - dt
        levels.append(S)
        times.append(t)
    return AdjointTrajectory(op.mesh, np.array(times[::-1]), np.array(levels[::-1]))


def write_adjoint_csv(path, adj: AdjointTrajectory):
    """Columns t, then cell means of sigma1 and sigma2 per cell."""
    n = adj.mesh.n_cells
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"sigma1_{j}" for j in range(n)] + [f"sigma2_{j}" for j in range(n)])
        for t, c in zip(adj.times, adj.coeffs):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in c[0, :, 0]] + [repr(float(v)) for v in c[1, :, 0]])
