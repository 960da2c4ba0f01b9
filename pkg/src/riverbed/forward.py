"""RK-DG solver for the 1D shallow water equations with a moving bottom.

The bottom slope is ``B(x, t) = b0'(x) + p(t) b1'(x)`` and enters only the
momentum source ``-g h B``.  Space is discretised with modal DG and a global
Lax-Friedrichs flux, time with third-order SSP Runge-Kutta.  The bottom slope
is evaluated at the stage times t, t+dt and t+dt/2; the last one comes from
quadratic interpolation of p through the previous, current and next step.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import CFLError, DryStateError
from .limiters import apply_limiter
from .mesh import Mesh1D, PiecewiseField, basis_at, default_quadrature, project

GRAVITY = 9.812
DRY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    degree: int
    n_cells: int
    final_time: float
    gravity: float = GRAVITY
    cfl: float | None = None
    limiter: str = "none"
    tvb_m: float = 50.0
    x0: float = 0.0
    xL: float = 1.0

    def __post_init__(self):
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")
        if self.final_time < 0:
            raise ValueError("final_time must be nonnegative")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.limiter not in ("none", "minmod", "weno"):
            raise ValueError(f"unknown limiter {self.limiter!r}")

    @property
    def cfl_number(self) -> float:
        return self.cfl if self.cfl is not None else 0.18 / (2 * self.degree + 1)

    @property
    def mesh(self) -> Mesh1D:
        return Mesh1D(self.x0, self.xL, self.n_cells, periodic=True)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class BottomTopography:
    b0: Callable
    b1: Callable
    db0: Callable
    db1: Callable

    def slope(self, x, p):
        return self.db0(x) + p * self.db1(x)

    def height(self, x, p):
        return self.b0(x) + p * self.b1(x)


class ControlSignal:
    """Samples of p(t) on a strictly increasing time grid; linear in between."""

    def __init__(self, times, values):
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise ValueError("times and values must be 1D of equal length >= 2")
        if np.any(np.diff(times) <= 0):
            raise ValueError("control times must be strictly increasing")
        times.setflags(write=False)
        values.setflags(write=False)
        self.times = times
        self.values = values

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.times[-1]))
        if np.any(t < self.times[0] - tol) or np.any(t > self.times[-1] + tol):
            raise ValueError(f"p evaluated outside [{self.times[0]}, {self.times[-1]}]")
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def with_values(self, values) -> "ControlSignal":
        return ControlSignal(self.times, values)

    def __add__(self, other):
        v = other.values if isinstance(other, ControlSignal) else other
        return self.with_values(self.values + v)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"ControlSignal(n={len(self.times)}, T={self.times[-1]:g})"


class SWEState:
    """Water height and discharge as one (2, n_cells, k+1) coefficient block."""

    def __init__(self, mesh: Mesh1D, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[:2] != (2, mesh.n_cells):
            raise ValueError(f"bad SWE coefficient shape {coeffs.shape}")
        self.mesh = mesh
        self.coeffs = coeffs

    @classmethod
    def from_fields(cls, h: PiecewiseField, hu: PiecewiseField) -> "SWEState":
        if h.mesh != hu.mesh or h.degree != hu.degree:
            raise ValueError("h and hu must share mesh and degree")
        return cls(h.mesh, np.stack([h.coeffs, hu.coeffs]))

    @classmethod
    def project(cls, h0, hu0, mesh: Mesh1D, degree: int) -> "SWEState":
        return cls.from_fields(project(h0, mesh, degree), project(hu0, mesh, degree))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    @property
    def h(self) -> PiecewiseField:
        return PiecewiseField(self.mesh, self.coeffs[0])

    @property
    def hu(self) -> PiecewiseField:
        return PiecewiseField(self.mesh, self.coeffs[1])

    def mass(self) -> float:
        return float(self.mesh.dx * np.sum(self.coeffs[0, :, 0]))


@dataclass
class BoundaryTrace:
    """(h, hu) at x0 and xL for each time; ``left``/``right`` have shape (n, 2)."""

    times: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.left = np.asarray(self.left, dtype=float).reshape(-1, 2)
        self.right = np.asarray(self.right, dtype=float).reshape(-1, 2)
        if not (len(self.times) == len(self.left) == len(self.right)):
            raise ValueError("trace arrays must share the time dimension")

    def as_array(self) -> np.ndarray:
        """Columns t, h_x0, hu_x0, h_xL, hu_xL."""
        return np.column_stack([self.times, self.left, self.right])

    def to_csv(self, path):
        write_trace_csv(path, self)


TRACE_HEADER = ("t", "h_x0", "hu_x0", "h_xL", "hu_xL")


def write_trace_csv(path, trace: BoundaryTrace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace.as_array():
            w.writerow([repr(float(v)) for v in row])


def read_trace_csv(path) -> BoundaryTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    a = np.array(rows[1:], dtype=float).reshape(-1, 5)
    return BoundaryTrace(a[:, 0], a[:, 1:3], a[:, 3:5])


@dataclass
class Trajectory:
    """Stored step levels of a forward solve (RK stages are not kept)."""

    mesh: Mesh1D
    times: np.ndarray
    coeffs: np.ndarray  # (n_levels, 2, n_cells, k+1)
    alphas: np.ndarray  # wave-speed bound used for each step (last entry repeats)
    p_values: np.ndarray = field(default=None)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    def state(self, i: int) -> SWEState:
        return SWEState(self.mesh, self.coeffs[i])

    @property
    def final(self) -> SWEState:
        return self.state(-1)

    def interp_weights(self, t):
        """Left index and weight of linear time interpolation for each t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tt = self.times
        tol = 1e-12 * max(1.0, abs(tt[-1]))
        if np.any(t < tt[0] - tol) or np.any(t > tt[-1] + tol):
            raise ValueError("time outside the stored trajectory")
        if len(tt) == 1:
            return np.zeros(len(t), int), np.zeros(len(t))
        i = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, len(tt) - 2)
        w = np.clip((t - tt[i]) / (tt[i + 1] - tt[i]), 0.0, 1.0)
        return i, w

    def state_at(self, t: float) -> SWEState:
        i, w = self.interp_weights(t)
        i, w = int(i[0]), float(w[0])
        if len(self.times) == 1:
            return self.state(0)
        return SWEState(self.mesh, (1 - w) * self.coeffs[i] + w * self.coeffs[i + 1])

    def alpha_at(self, t) -> float:
        return float(np.interp(t, self.times, self.alphas))


# ---------------------------------------------------------------------------
# pointwise physics


def physical_flux(h, hu, g=GRAVITY):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DryStateError("physical flux evaluated at a dry state")
    return hu, hu * hu / h + 0.5 * g * h * h


def lax_friedrichs_flux(uL, uR, alpha, g=GRAVITY):
    fl = physical_flux(uL[0], uL[1], g)
    fr = physical_flux(uR[0], uR[1], g)
    return (
        0.5 * (fl[0] + fr[0] - alpha * (uR[0] - uL[0])),
        0.5 * (fl[1] + fr[1] - alpha * (uR[1] - uL[1])),
    )


# ---------------------------------------------------------------------------
# DG operator


@dataclass(frozen=True)
class _Tables:
    V: np.ndarray
    Vw: np.ndarray  # w_q P_m(xi_q): (nq, k+1)
    dVw: np.ndarray  # w_q P_m'(xi_q)
    sgn: np.ndarray  # P_m(-1)
    two_m1: np.ndarray


@lru_cache(maxsize=None)
def _tables(degree: int) -> _Tables:
    quad = default_quadrature(degree)
    V, dV = basis_at(quad.nodes, degree)
    w = quad.weights[:, None]
    return _Tables(V, V * w, dV * w, (-1.0) ** np.arange(degree + 1), 2.0 * np.arange(degree + 1) + 1.0)


def quad_points(mesh: Mesh1D, degree: int) -> np.ndarray:
    return mesh.physical(default_quadrature(degree).nodes)


def _check_wet(h, hl, hr, t):
    if h.min() <= DRY_TOLERANCE or hl.min() <= DRY_TOLERANCE or hr.min() <= DRY_TOLERANCE:
        cell = int(np.argmin(np.minimum(h.min(axis=1), np.minimum(hl, hr))))
        raise DryStateError(f"dry state (h <= {DRY_TOLERANCE}) at t={t}, cell {cell}", t, cell)


def _wavespeed(h, hu, g):
    return np.abs(hu / h) + np.sqrt(g * h)


def _alpha(U, tab, g, t=None):
    Uq = U @ tab.V.T
    hl = U[0] @ tab.sgn
    hr = U[0].sum(-1)
    _check_wet(Uq[0], hl, hr, t)
    a = max(
        _wavespeed(Uq[0], Uq[1], g).max(),
        _wavespeed(hl, U[1] @ tab.sgn, g).max(),
        _wavespeed(hr, U[1].sum(-1), g).max(),
    )
    if not np.isfinite(a) or a > 1e8:
        s = _wavespeed(Uq[0], Uq[1], g).max(axis=1)
        cell = int(np.nanargmax(np.where(np.isfinite(s), s, np.inf)))
        raise CFLError(f"wave speed blew up at t={t}, cell {cell}", t, cell)
    return float(a)


def _rhs(U, Bq, g, dx, tab, t=None, alpha=None):
    """Semi-discrete DG residual dU/dt for coefficient block U (periodic)."""
    Uq = U @ tab.V.T
    h, hu = Uq
    Ul = U @ tab.sgn
    Ur = U.sum(-1)
    _check_wet(h, Ul[0], Ur[0], t)
    if alpha is None:
        alpha = max(
            _wavespeed(h, hu, g).max(), _wavespeed(Ul[0], Ul[1], g).max(), _wavespeed(Ur[0], Ur[1], g).max()
        )
    Fq = np.empty_like(Uq)
    Fq[0] = hu
    Fq[1] = hu * hu / h + 0.5 * g * h * h
    vol = Fq @ tab.dVw
    # face j+1/2 joins the right trace of cell j and the left trace of cell j+1
    a = Ur
    b = np.roll(Ul, -1, axis=1)
    fa0, fa1 = a[1], a[1] * a[1] / a[0] + 0.5 * g * a[0] * a[0]
    fb0, fb1 = b[1], b[1] * b[1] / b[0] + 0.5 * g * b[0] * b[0]
    Fr = np.empty_like(a)
    Fr[0] = 0.5 * (fa0 + fb0 - alpha * (b[0] - a[0]))
    Fr[1] = 0.5 * (fa1 + fb1 - alpha * (b[1] - a[1]))
    Fl = np.roll(Fr, 1, axis=1)
    res = vol - Fr[..., None] + Fl[..., None] * tab.sgn
    res[1] += (-0.5 * dx * g) * ((h * Bq) @ tab.Vw)
    res *= tab.two_m1 / dx
    return res


def semi_discrete_rhs(state: SWEState, bottom_B: PiecewiseField, g: float = GRAVITY) -> SWEState:
    tab = _tables(state.degree)
    if bottom_B.degree != state.degree or bottom_B.mesh != state.mesh:
        raise ValueError("bottom slope must live in the same DG space as the state")
    Bq = bottom_B.coeffs @ tab.V.T
    return SWEState(state.mesh, _rhs(state.coeffs, Bq, g, state.mesh.dx, tab))


def max_wavespeed(state: SWEState, g: float = GRAVITY) -> float:
    return _alpha(state.coeffs, _tables(state.degree), g)


class _BottomCache:
    """Quadrature values of the projected slope components b0', b1'."""

    def __init__(self, bottom: BottomTopography, mesh: Mesh1D, degree: int):
        tab = _tables(degree)
        self.B0 = project(bottom.db0, mesh, degree).coeffs @ tab.V.T
        self.B1 = project(bottom.db1, mesh, degree).coeffs @ tab.V.T

    def __call__(self, p: float) -> np.ndarray:
        return self.B0 + p * self.B1


def stage_controls(p, t, dt, t_prev=None):
    """p at the three SSP-RK3 stage times t, t+dt, t+dt/2."""
    p0 = float(p(t))
    p1 = float(p(t + dt))
    if t_prev is None or t_prev >= t:
        pm = 0.5 * (p0 + p1)
    else:
        pp = float(p(t_prev))
        tm = t + 0.5 * dt
        t1 = t + dt
        pm = (
            pp * (tm - t) * (tm - t1) / ((t_prev - t) * (t_prev - t1))
            + p0 * (tm - t_prev) * (tm - t1) / ((t - t_prev) * (t - t1))
            + p1 * (tm - t_prev) * (tm - t) / ((t1 - t_prev) * (t1 - t))
        )
    return p0, p1, pm


def _rk3(U, t, dt, controls, bcache, cfg, tab, dx):
    g = cfg.gravity
    lim = cfg.limiter
    p0, p1, pm = controls
    U1 = U + dt * _rhs(U, bcache(p0), g, dx, tab, t)
    U1 = apply_limiter(U1, lim, g, dx, cfg.tvb_m)
    U2 = 0.75 * U + 0.25 * (U1 + dt * _rhs(U1, bcache(p1), g, dx, tab, t + dt))
    U2 = apply_limiter(U2, lim, g, dx, cfg.tvb_m)
    U3 = U / 3.0 + (2.0 / 3.0) * (U2 + dt * _rhs(U2, bcache(pm), g, dx, tab, t + 0.5 * dt))
    return apply_limiter(U3, lim, g, dx, cfg.tvb_m)


def ssp_rk3_step(
    state: SWEState,
    t: float,
    dt: float,
    bottom: BottomTopography,
    p,
    cfg: SolverConfig,
    t_prev: float | None = None,
) -> SWEState:
    tab = _tables(state.degree)
    bcache = _BottomCache(bottom, state.mesh, state.degree)
    U = _rk3(state.coeffs, t, dt, stage_controls(p, t, dt, t_prev), bcache, cfg, tab, state.mesh.dx)
    return SWEState(state.mesh, U)


def initial_state(ic, cfg: SolverConfig) -> SWEState:
    if isinstance(ic, SWEState):
        if ic.mesh != cfg.mesh or ic.degree != cfg.degree:
            raise ValueError("initial state does not match the solver configuration")
        return ic
    h0, hu0 = ic
    return SWEState.project(h0, hu0, cfg.mesh, cfg.degree)


def solve_forward(ic, bottom: BottomTopography, p, cfg: SolverConfig, times=None, keep_levels=True):
    """Integrate from 0 to ``cfg.final_time``.

    ``ic`` is an SWEState or a pair of callables (h0, hu0); ``p`` is any
    callable of t (a ControlSignal, or an analytic function).  By default the
    step is cfl*dx/alpha with the final step clipped to land on T; passing
    ``times`` forces a prescribed step grid instead.  With
    ``keep_levels=False`` only the initial and final levels are stored (the
    boundary trace still covers every step).
    Returns (Trajectory, BoundaryTrace).
    """
    mesh = cfg.mesh
    tab = _tables(cfg.degree)
    dx = mesh.dx
    g = cfg.gravity
    T = cfg.final_time
    bcache = _BottomCache(bottom, mesh, cfg.degree)
    U = initial_state(ic, cfg).coeffs.copy()
    U = apply_limiter(U, cfg.limiter, g, dx, cfg.tvb_m)

    if times is not None:
        times = np.asarray(times, dtype=float)
        if times[0] != 0.0 or abs(times[-1] - T) > 1e-12 * max(T, 1.0) or np.any(np.diff(times) <= 0):
            raise ValueError("prescribed step grid must run from 0 to T increasingly")

    sgn = tab.sgn
    levels = [U]
    lefts = [U[:, 0, :] @ sgn]
    rights = [U[:, -1, :].sum(-1)]
    tt = [0.0]
    alphas = []
    t = 0.0
    t_prev = None
    n = 0
    while True:
        if times is not None:
            if n + 1 >= len(times):
                break
            dt = times[n + 1] - times[n]
            alpha = _alpha(U, tab, g, t)
        else:
            if t >= T * (1 - 1e-14) or T == 0.0:
                break
            alpha = _alpha(U, tab, g, t)
            dt = cfg.cfl_number * dx / alpha
            last = t + dt >= T * (1 - 1e-12)
            if last:
                dt = T - t
        U = _rk3(U, t, dt, stage_controls(p, t, dt, t_prev), bcache, cfg, tab, dx)
        t_prev = t
        if times is not None:
            t = float(times[n + 1])
        else:
            t = T if last else t + dt
        n += 1
        if keep_levels:
            levels.append(U)
        lefts.append(U[:, 0, :] @ sgn)
        rights.append(U[:, -1, :].sum(-1))
        tt.append(t)
        alphas.append(alpha)
    alphas.append(_alpha(U, tab, g, t) if not alphas else alphas[-1])
    tt = np.array(tt)
    trace = BoundaryTrace(tt, np.array(lefts), np.array(rights))
    alphas = np.array(alphas)
    if not keep_levels:
        if len(tt) > 1:
            levels.append(U)
            alphas = alphas[[0, -1]]
        tt = tt[[0, -1]] if len(tt) > 1 else tt
    traj = Trajectory(mesh, tt, np.array(levels), alphas, p_values=np.array([float(p(s)) for s in tt]))
    return traj, trace


def boundary_trace(traj: Trajectory) -> BoundaryTrace:
    c = traj.coeffs
    sgn = (-1.0) ** np.arange(traj.degree + 1)
    left = c[:, :, 0, :] @ sgn  # cell 0 at xi=-1
    right = c[:, :, -1, :].sum(-1)  # last cell at xi=+1
    return BoundaryTrace(traj.times, left, right)
