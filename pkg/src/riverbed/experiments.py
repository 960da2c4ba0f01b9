"""End-to-end drivers: data generation, inversion, accuracy, Taylor and L-curve runs."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cases import get_case
from .config import ExperimentConfig
from .forward import ControlSignal, SolverConfig, solve_forward
from .measurement import generate_measured_data, noisy_initial_guess
from .mesh import l1_error
from .objective import InverseProblem
from .optimizer import RegularizationParams, h1_seminorm, l1_regularizer, run_inversion
from .taylor import default_directions, taylor_test

DIRECTIONS = ("constant", "bump", "random")


def measured_data(cfg: ExperimentConfig):
    return generate_measured_data(cfg.case, cfg.fine, cfg.noise)


def make_problem(cfg: ExperimentConfig, measured=None) -> InverseProblem:
    if measured is None:
        measured = measured_data(cfg)
    return InverseProblem(cfg.case, measured, cfg.forward, cfg.adjoint)


def initial_guess(cfg: ExperimentConfig, problem: InverseProblem) -> ControlSignal:
    return noisy_initial_guess(cfg.case.p_initial, problem.control_times, cfg.noise)


def invert(cfg: ExperimentConfig, measured=None, callback=None, reg: RegularizationParams | None = None):
    problem = make_problem(cfg, measured)
    p0 = initial_guess(cfg, problem)
    res = run_inversion(problem, reg or cfg.regularization, cfg.n_iters, p0, cfg.learning_rate, cfg.relaxation,
                        snapshot_every=cfg.snapshot_every, callback=callback)
    return res, problem


# ---------------------------------------------------------------------------
# forward accuracy by self-convergence


def accuracy_table(case_id="d", degrees=(0, 1, 2), cells=(25, 50, 100, 200, 400), final_time=None):
    """L1 self-convergence errors |U_N - U_2N| of h and hu at the final time.

    The coarse solution is evaluated pointwise on the finer mesh's quadrature.
    """
    case = get_case(case_id)
    T = case.final_time if final_time is None else final_time
    rows = []
    for k in degrees:
        finals = {}
        for n in sorted(set(cells) | {2 * c for c in cells}):
            traj, _ = solve_forward(case.ic, case.bottom, case.p_true, SolverConfig(k, n, T), keep_levels=False)
            finals[n] = traj.final
        prev = None
        for n in cells:
            coarse, fine = finals[n], finals[2 * n]
            e_h = l1_error(fine.h, coarse.h.__call__)
            e_hu = l1_error(fine.hu, coarse.hu.__call__)
            row = {"degree": k, "n_cells": n, "err_h": e_h, "err_hu": e_hu, "order_h": np.nan, "order_hu": np.nan}
            if prev is not None:
                r = n / prev["n_cells"]
                row["order_h"] = np.log(prev["err_h"] / e_h) / np.log(r)
                row["order_hu"] = np.log(prev["err_hu"] / e_hu) / np.log(r)
            rows.append(row)
            prev = row
    return rows


ACCURACY_HEADER = ("degree", "n_cells", "err_h", "order_h", "err_hu", "order_hu")


def write_accuracy_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ACCURACY_HEADER)
        for r in rows:
            w.writerow([r["degree"], r["n_cells"]] + [
                "" if np.isnan(r[c]) else repr(float(r[c])) for c in ("err_h", "order_h", "err_hu", "order_hu")])


def format_accuracy(rows) -> str:
    lines = [f"{'k':>2} {'N':>5} {'L1 err h':>12} {'order':>7} {'L1 err hu':>12} {'order':>7}"]
    for r in rows:
        oh = "-" if np.isnan(r["order_h"]) else f"{r['order_h']:.4f}"
        ohu = "-" if np.isnan(r["order_hu"]) else f"{r['order_hu']:.4f}"
        lines.append(f"{r['degree']:>2} {r['n_cells']:>5} {r['err_h']:12.4e} {oh:>7} {r['err_hu']:12.4e} {ohu:>7}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Taylor test


def taylor(cfg: ExperimentConfig, measured=None, direction=None):
    """Gradient check at the noise-free initial guess with the data held fixed."""
    problem = make_problem(cfg, measured)
    grid = problem.control_times
    p = problem.control(np.broadcast_to(cfg.case.p_initial(grid), grid.shape))
    name = direction or cfg.taylor.direction
    if name not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    dp = default_directions(grid, cfg.final_time, cfg.noise.seed)[DIRECTIONS.index(name)]
    return taylor_test(p, dp, cfg.taylor.k0, cfg.taylor.n_halvings, problem)


# ---------------------------------------------------------------------------
# L-curve


@dataclass
class LCurvePoint:
    gamma_hat: float
    j0: float
    regularizer: float  # gamma_hat * (gamma_L r_l1 + gamma_H r_h1) at the best iterate
    r_l1: float
    r_h1: float
    best_iteration: int


def menger_curvature(x, y) -> np.ndarray:
    """Curvature of the circle through each interior triple; ends get 0."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    kappa = np.zeros(len(x))
    for i in range(1, len(x) - 1):
        a = np.hypot(x[i] - x[i - 1], y[i] - y[i - 1])
        b = np.hypot(x[i + 1] - x[i], y[i + 1] - y[i])
        c = np.hypot(x[i + 1] - x[i - 1], y[i + 1] - y[i - 1])
        area2 = (x[i] - x[i - 1]) * (y[i + 1] - y[i - 1]) - (y[i] - y[i - 1]) * (x[i + 1] - x[i - 1])
        if a * b * c > 0:
            kappa[i] = 2.0 * abs(area2) / (a * b * c)
    return kappa


def lcurve_corner(points) -> int:
    x = np.log10([p.j0 for p in points])
    y = np.log10([max(p.regularizer, np.finfo(float).tiny) for p in points])
    return int(np.argmax(menger_curvature(x, y)))


def lcurve(cfg: ExperimentConfig, exponents=range(-5, 6), measured=None, progress=None):
    problem = make_problem(cfg, measured)
    p0 = initial_guess(cfg, problem)
    base = cfg.regularization
    pts = []
    for i in exponents:
        gh = 10.0 ** i
        reg = RegularizationParams(base.gamma_l, base.gamma_h, base.p_background, gh)
        res = run_inversion(problem, reg, cfg.n_iters, p0, cfg.learning_rate, cfg.relaxation)
        best = res.best
        r1 = l1_regularizer(best.p, reg.p_background)
        r2 = h1_seminorm(best.p)
        pts.append(LCurvePoint(gh, best.j0, gh * (reg.gamma_l * r1 + reg.gamma_h * r2), r1, r2, best.iteration))
        if progress:
            progress(pts[-1])
    return pts


LCURVE_HEADER = ("gamma_hat", "j0", "regularizer", "r_l1", "r_h1", "best_iteration")


def write_lcurve_csv(path, pts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LCURVE_HEADER)
        for p in pts:
            w.writerow([repr(p.gamma_hat), repr(p.j0), repr(p.regularizer), repr(p.r_l1), repr(p.r_h1),
                        p.best_iteration])


def write_snapshots_csv(path, times, snapshots: dict):
    its = sorted(snapshots)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"iter_{i}" for i in its])
        for j, t in enumerate(times):
            w.writerow([repr(float(t))] + [repr(float(snapshots[i][j])) for i in its])
