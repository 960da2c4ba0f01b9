"""Three-operator splitting for min J0(p) + gamma_L |p - p0|_1 + gamma_H |p'|^2.

One iteration, with learning rate l and relaxation lam:

    kappa = 2 p - z - l grad J0(p)
    omega = (I - l gamma_H Delta)^-1 kappa
    z     = z + lam (omega - p)
    p     = shrink(z; l gamma_L, about p0)
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .forward import ControlSignal
from .objective import CostRecord, GradientSignal, InverseProblem


@dataclass(frozen=True)
class RegularizationParams:
    gamma_l: float = 1e-6
    gamma_h: float = 5e-8
    p_background: float = 1.0
    gamma_hat: float = 1.0

    def __post_init__(self):
        if self.gamma_l < 0 or self.gamma_h < 0:
            raise ValueError("regularization weights must be nonnegative")
        if self.gamma_hat <= 0:
            raise ValueError("gamma_hat must be positive")


@dataclass
class BestIterate:
    iteration: int
    j0: float
    p: ControlSignal


@dataclass
class OptimizerState:
    p: ControlSignal
    z: ControlSignal
    learning_rate: float
    relaxation: float = 1.0
    iteration: int = 0
    best: BestIterate | None = None


def prox_l1(w: ControlSignal, threshold: float, p0: float = 1.0) -> ControlSignal:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if threshold == 0:
        return w.with_values(w.values.copy())
    d = w.values - p0
    return w.with_values(np.sign(d) * np.maximum(np.abs(d) - threshold, 0.0) + p0)


def _laplacian_bands(times):
    """Second difference on a nonuniform grid with reflecting ends.

    Returns (lower, diag, upper) of Delta; row i is divided by the dual cell
    width, so Delta is symmetric in the trapezoid inner product.
    """
    dt = np.diff(times)
    n = len(times)
    dual = np.empty(n)
    dual[0] = 0.5 * dt[0]
    dual[-1] = 0.5 * dt[-1]
    dual[1:-1] = 0.5 * (dt[:-1] + dt[1:])
    inv = 1.0 / dt
    upper = np.zeros(n)
    lower = np.zeros(n)
    upper[:-1] = inv
    lower[1:] = inv
    lower, upper = lower / dual, upper / dual
    return lower, -(lower + upper), upper


def apply_laplacian(values, times):
    lo, di, up = _laplacian_bands(times)
    out = di * values
    out[:-1] += up[:-1] * values[1:]
    out[1:] += lo[1:] * values[:-1]
    return out


def prox_h1(w: ControlSignal, coeff: float) -> ControlSignal:
    """Solve (I - coeff * Delta) out = w with a banded direct solver."""
    if coeff < 0:
        raise ValueError("coeff must be nonnegative")
    if coeff == 0:
        return w.with_values(w.values.copy())
    lo, di, up = _laplacian_bands(w.times)
    ab = np.zeros((3, len(w.times)))
    ab[0, 1:] = -coeff * up[:-1]
    ab[1] = 1.0 - coeff * di
    ab[2, :-1] = -coeff * lo[1:]
    return w.with_values(solve_banded((1, 1), ab, w.values))


def l1_regularizer(p: ControlSignal, p0: float) -> float:
    return float(np.trapezoid(np.abs(p.values - p0), p.times))


def h1_seminorm(p: ControlSignal) -> float:
    """Discrete int |p'|^2 dt = sum (dp)^2 / dt."""
    return float(np.sum(np.diff(p.values) ** 2 / np.diff(p.times)))


def cost_record(j0: float, p: ControlSignal, reg: RegularizationParams) -> CostRecord:
    return CostRecord.build(j0, l1_regularizer(p, reg.p_background), h1_seminorm(p), reg.gamma_l, reg.gamma_h,
                            reg.gamma_hat)


def splitting_step(state: OptimizerState, grad: GradientSignal, reg: RegularizationParams) -> OptimizerState:
    if len(grad.times) != len(state.p.times) or not np.allclose(grad.times, state.p.times, rtol=0, atol=1e-14):
        raise ValueError("gradient and control live on different grids")
    ell = state.learning_rate
    scale = ell * reg.gamma_hat
    kappa = state.p.with_values(2.0 * state.p.values - state.z.values - ell * grad.values)
    omega = prox_h1(kappa, scale * reg.gamma_h)
    z = state.z.with_values(state.z.values + state.relaxation * (omega.values - state.p.values))
    p = prox_l1(z, scale * reg.gamma_l, reg.p_background)
    return replace(state, p=p, z=z, iteration=state.iteration + 1)


@dataclass
class InversionResult:
    best: BestIterate
    history: list
    p_initial: ControlSignal
    final: OptimizerState
    snapshots: dict = field(default_factory=dict)
    elapsed: float = 0.0


class IterationError(RuntimeError):
    def __init__(self, iteration, cause):
        super().__init__(f"iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause


def run_inversion(
    problem: InverseProblem,
    reg: RegularizationParams,
    n_iters: int,
    p_initial: ControlSignal,
    learning_rate: float = 0.6,
    relaxation: float = 1.0,
    snapshot_every: int = 0,
    callback=None,
) -> InversionResult:
    """Run ``n_iters`` splitting steps from ``p_initial`` (with z = p).

    Iterate k is evaluated (forward, adjoint, gradient) and then stepped, so
    the history holds one CostRecord per iteration, iterate 0 being the
    initial guess.  ``final`` carries the last stepped, unevaluated iterate.
    The returned best iterate minimises j0 alone.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    t0 = time.perf_counter()
    state = OptimizerState(p_initial, p_initial, learning_rate, relaxation)
    history = []
    snapshots = {}
    best = None
    for it in range(n_iters):
        try:
            j0, grad = problem.misfit_and_gradient(state.p)
        except Exception as exc:  # numerical failures carry the iteration index
            raise IterationError(it, exc) from exc
        history.append(cost_record(j0, state.p, reg))
        if best is None or j0 < best.j0:
            best = BestIterate(it, j0, state.p)
        state.best = best
        if snapshot_every and it % snapshot_every == 0:
            snapshots[it] = state.p.values.copy()
        if callback is not None:
            callback(it, history[-1], state)
        state = splitting_step(state, grad, reg)
        state.best = best
    return InversionResult(best, history, p_initial, state, snapshots, time.perf_counter() - t0)


RECOVERED_HEADER = ("t", "p_true", "p_best", "p_initial")


def write_recovered(path, result: InversionResult, p_true):
    t = result.best.p.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECOVERED_HEADER)
        for row in zip(t, np.broadcast_to(p_true(t), t.shape), result.best.p.values, result.p_initial.values):
            w.writerow([repr(float(v)) for v in row])
