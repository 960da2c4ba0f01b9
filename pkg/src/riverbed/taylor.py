"""Taylor remainder test for the adjoint gradient.

With R1(k) = |J(p + k dp) - J(p)| and R2(k) = |J(p + k dp) - J(p) - k <grad J, dp>|,
a correct gradient gives R1 = O(k) and R2 = O(k^2) as k is halved.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .forward import ControlSignal
from .objective import directional_derivative

FLOOR_FACTOR = 100.0


@dataclass
class TaylorReport:
    k_values: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    j0: float
    slope: float

    @property
    def order1(self) -> np.ndarray:
        return _rates(self.r1)

    @property
    def order2(self) -> np.ndarray:
        return _rates(self.r2)

    def valid_mask(self) -> np.ndarray:
        """Halvings whose R2 values stay above the round-off floor."""
        floor = FLOOR_FACTOR * np.finfo(float).eps * max(abs(self.j0), np.finfo(float).tiny)
        ok = self.r2 > floor
        return ok[:-1] & ok[1:]

    def median_orders(self):
        m = self.valid_mask()
        if not m.any():
            return float("nan"), float("nan")
        return float(np.median(self.order1[m])), float(np.median(self.order2[m]))

    def passed(self, band1=(0.8, 1.2), band2=(1.8, 2.2)) -> bool:
        o1, o2 = self.median_orders()
        return band1[0] <= o1 <= band1[1] and band2[0] <= o2 <= band2[1]

    def verdict(self) -> str:
        o1, o2 = self.median_orders()
        status = "PASS" if self.passed() else "FAIL"
        return f"{status}: median order1={o1:.3f} (want 0.8..1.2), median order2={o2:.3f} (want 1.8..2.2)"

    def to_csv(self, path):
        o1 = np.concatenate([[np.nan], self.order1])
        o2 = np.concatenate([[np.nan], self.order2])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("k", "R1", "R2", "order1", "order2"))
            for row in zip(self.k_values, self.r1, self.r2, o1, o2):
                w.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])
            fh.write(f"# {self.verdict()}\n")


def _rates(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log2(r[:-1] / r[1:])


def taylor_remainders(functional, base_value, slope, p: ControlSignal, delta_p: ControlSignal, k0, n_halvings):
    """Core loop; ``functional`` maps a ControlSignal to a scalar."""
    ks = k0 * 0.5 ** np.arange(n_halvings + 1)
    r1 = np.empty(len(ks))
    r2 = np.empty(len(ks))
    for i, k in enumerate(ks):
        jk = functional(p + delta_p.values * k)
        r1[i] = abs(jk - base_value)
        r2[i] = abs(jk - base_value - k * slope)
    return ks, r1, r2


def taylor_test(p: ControlSignal, delta_p: ControlSignal, k0: float = 1e-2, n_halvings: int = 5,
                problem=None) -> TaylorReport:
    """Run the halving sweep on ``problem``.

    ``problem`` needs ``misfit(p)`` and ``misfit_and_gradient(p)``; the
    inverse problem object provides both, and so can any surrogate.
    """
    if problem is None:
        raise ValueError("taylor_test needs a problem")
    if not np.any(delta_p.values):
        zeros = np.zeros(n_halvings + 1)
        return TaylorReport(k0 * 0.5 ** np.arange(n_halvings + 1), zeros, zeros.copy(), 0.0, 0.0)
    j0, grad = problem.misfit_and_gradient(p)
    slope = directional_derivative(grad, delta_p)
    ks, r1, r2 = taylor_remainders(problem.misfit, j0, slope, p, delta_p, k0, n_halvings)
    return TaylorReport(ks, r1, r2, j0, slope)


def unit_l2(values, times) -> np.ndarray:
    n = np.sqrt(np.trapezoid(values * values, times))
    if n == 0:
        raise ValueError("cannot normalise a zero direction")
    return values / n


def default_directions(grid, T: float, seed: int = 0):
    """Constant, central bump and a seeded low-pass random direction, unit L2 each."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    const = unit_l2(np.ones_like(grid), grid)
    bump = unit_l2(np.exp(-700.0 * (grid - 0.5 * T) ** 2), grid)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    # a few random Fourier modes on [0, T]
    n_modes = 6
    a = rng.standard_normal(n_modes)
    s = sum(a[j] * np.cos(np.pi * j * grid / T) / (1 + j) for j in range(n_modes))
    rand = unit_l2(s, grid)
    return [ControlSignal(grid, v) for v in (const, bump, rand)]


class QuadraticSurrogate:
    """J(p) = int p^2 dt with gradient 2p; exercises the harness in closed form."""

    def misfit(self, p: ControlSignal) -> float:
        return float(np.trapezoid(p.values**2, p.times))

    def misfit_and_gradient(self, p: ControlSignal):
        from .objective import GradientSignal

        return self.misfit(p), GradientSignal(p.times, 2.0 * p.values)
