"""Boundary misfit J0 and its adjoint-based gradient on the control grid."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .adjoint import AdjointTrajectory, MisfitTrace, solve_adjoint
from .forward import GRAVITY, BottomTopography, BoundaryTrace, ControlSignal, Trajectory, solve_forward
from .measurement import resample_trace
from .mesh import QuadratureRule, basis_at


@dataclass(frozen=True)
class CostRecord:
    j0: float
    r_l1: float
    r_h1: float
    total: float

    @classmethod
    def build(cls, j0, r_l1, r_h1, gamma_l, gamma_h, gamma_hat=1.0):
        return cls(j0, r_l1, r_h1, j0 + gamma_hat * (gamma_l * r_l1 + gamma_h * r_h1))


@dataclass
class GradientSignal:
    times: np.ndarray
    values: np.ndarray

    def as_control(self) -> ControlSignal:
        return ControlSignal(self.times, self.values)


def _same_grid(a, b, what="traces"):
    if len(a) != len(b) or not np.allclose(a, b, rtol=0, atol=1e-13 * max(1.0, abs(a[-1]))):
        raise ValueError(f"{what} are not on the same time grid")


def misfit_j0(trace: BoundaryTrace, measured: BoundaryTrace) -> float:
    """Trapezoid over step times of 0.5|E(x0)|^2 + 0.5|E(xL)|^2."""
    _same_grid(trace.times, measured.times)
    e = 0.5 * (np.sum((trace.left - measured.left) ** 2, axis=1) + np.sum((trace.right - measured.right) ** 2, axis=1))
    return float(np.trapezoid(e, trace.times))


def gradient_j0(
    adjoint: AdjointTrajectory,
    trajectory: Trajectory,
    bottom: BottomTopography,
    g: float = GRAVITY,
    times=None,
    n_quad: int | None = None,
) -> GradientSignal:
    """int -g sigma2 h b1' dx at every control time, quadrature on the adjoint mesh."""
    if times is None:
        times = trajectory.times
    times = np.asarray(times, dtype=float)
    mesh = adjoint.mesh
    quad = QuadratureRule.gauss(n_quad or adjoint.degree + 2)
    xq = mesh.physical(quad.nodes)
    Va, _ = basis_at(quad.nodes, adjoint.degree)
    sig2 = adjoint.coeffs_at(times)[:, 1] @ Va.T  # (nt, n, nq)

    fm = trajectory.mesh
    cell, xi = fm.locate(xq.ravel(), 1)
    Vf = np.polynomial.legendre.legvander(xi, trajectory.degree)
    h_lv = np.einsum("lpk,pk->lp", trajectory.coeffs[:, 0, cell, :], Vf)
    i, w = trajectory.interp_weights(times)
    if len(trajectory.times) == 1:
        hq = np.repeat(h_lv[:1], len(times), axis=0)
    else:
        hq = (1 - w)[:, None] * h_lv[i] + w[:, None] * h_lv[i + 1]
    hq = hq.reshape(sig2.shape)
    integrand = -g * sig2 * hq * np.asarray(bottom.db1(xq), dtype=float)
    vals = 0.5 * mesh.dx * np.einsum("tnq,q->t", integrand, quad.weights)
    return GradientSignal(times, vals)


def directional_derivative(grad: GradientSignal, direction: ControlSignal) -> float:
    _same_grid(grad.times, direction.times, "gradient and direction")
    return float(np.trapezoid(grad.values * direction.values, grad.times))


COST_HEADER = ("iteration", "j0", "r_l1", "r_h1", "total")


def write_cost_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COST_HEADER)
        for it, rec in enumerate(history):
            w.writerow([it, repr(rec.j0), repr(rec.r_l1), repr(rec.r_h1), repr(rec.total)])


def read_cost_history(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != COST_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    return [CostRecord(*map(float, r[1:])) for r in rows[1:]]


class InverseProblem:
    """Case + measured data + solver settings; evaluates J0 and its gradient.

    The control grid defaults to the step times of the measured-data run.
    Measured data are resampled (linearly) onto each forward run's own step
    times and cached per grid.
    """

    def __init__(self, case, measured: BoundaryTrace, forward_cfg, adjoint_cfg, control_times=None,
                 closure=None, freeze_time_grid=False):
        self.case = case
        self.measured = measured
        self.forward_cfg = forward_cfg
        self.adjoint_cfg = adjoint_cfg
        self.control_times = np.asarray(measured.times if control_times is None else control_times, dtype=float)
        self.closure = closure
        self.freeze_time_grid = freeze_time_grid
        self._grid = None
        self._resampled = {}
        self.n_forward = 0
        self.n_adjoint = 0

    @property
    def final_time(self) -> float:
        return float(self.forward_cfg.final_time)

    def control(self, values) -> ControlSignal:
        return ControlSignal(self.control_times, values)

    def _measured_on(self, times):
        hit = self._resampled.get(len(times))
        if hit is None or not np.array_equal(hit.times, times):
            hit = resample_trace(self.measured, times)
            self._resampled[len(times)] = hit
        return hit

    def forward(self, p):
        traj, trace = solve_forward(self.case.ic, self.case.bottom, p, self.forward_cfg,
                                    times=self._grid if self.freeze_time_grid else None)
        if self.freeze_time_grid and self._grid is None:
            self._grid = traj.times
        self.n_forward += 1
        return traj, trace

    def misfit(self, p) -> float:
        _, trace = self.forward(p)
        return misfit_j0(trace, self._measured_on(trace.times))

    def misfit_and_gradient(self, p):
        traj, trace = self.forward(p)
        meas = self._measured_on(trace.times)
        j0 = misfit_j0(trace, meas)
        adj = solve_adjoint(traj, MisfitTrace.from_traces(trace, meas), self.adjoint_cfg, self.case.bottom, p,
                            closure=self.closure)
        self.n_adjoint += 1
        grad = gradient_j0(adj, traj, self.case.bottom, self.forward_cfg.gravity, times=self.control_times)
        return j0, grad

    def gradient(self, p) -> GradientSignal:
        return self.misfit_and_gradient(p)[1]
