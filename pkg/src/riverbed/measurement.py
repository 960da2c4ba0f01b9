"""Synthetic boundary measurements and noisy initial guesses.

Noise is multiplicative and uniform: every entry is scaled by a factor drawn
from U[1 - eta/2, 1 + eta/2].  Random numbers come from numpy's PCG64 seeded
through ``SeedSequence(seed).spawn(2)``: child 0 feeds the measurement noise,
child 1 the initial-guess noise, so the two streams never interact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import BoundaryTrace, ControlSignal, SolverConfig, solve_forward

MEASUREMENT_STREAM = 0
GUESS_STREAM = 1


@dataclass(frozen=True)
class NoiseSpec:
    eta_meas: float = 0.1
    eta_p: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("eta_meas", "eta_p"):
            v = getattr(self, name)
            if not 0.0 <= v < 2.0:
                raise ValueError(f"{name} must lie in [0, 2), got {v}")


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    child = np.random.SeedSequence(seed).spawn(2)[stream]
    return np.random.Generator(np.random.PCG64(child))


def noise_factors(eta: float, shape, rng: np.random.Generator) -> np.ndarray:
    if eta == 0.0:
        return np.ones(shape)
    return rng.uniform(1.0 - 0.5 * eta, 1.0 + 0.5 * eta, size=shape)


def generate_measured_data(case, fine_cfg: SolverConfig, noise: NoiseSpec, return_clean=False):
    """Fine-mesh forward solve with the true p, then entrywise multiplicative noise."""
    _, clean = solve_forward(case.ic, case.bottom, case.p_true, fine_cfg, keep_levels=False)
    rng = rng_stream(noise.seed, MEASUREMENT_STREAM)
    # one factor per (time, boundary, variable); left block drawn before right
    mu = noise_factors(noise.eta_meas, (2,) + clean.left.shape, rng)
    noisy = BoundaryTrace(clean.times, clean.left * mu[0], clean.right * mu[1])
    return (noisy, clean) if return_clean else noisy


def noisy_initial_guess(p_initial, grid, noise: NoiseSpec) -> ControlSignal:
    grid = np.asarray(grid, dtype=float)
    p0 = np.broadcast_to(np.asarray(p_initial(grid), dtype=float), grid.shape)
    nu = noise_factors(noise.eta_p, grid.shape, rng_stream(noise.seed, GUESS_STREAM))
    return ControlSignal(grid, p0 * nu)


def resample_trace(trace: BoundaryTrace, target_grid) -> BoundaryTrace:
    """Componentwise linear interpolation of a trace onto ``target_grid``."""
    t = np.asarray(target_grid, dtype=float)
    src = trace.times
    tol = 1e-12 * max(1.0, abs(src[-1]))
    if t.min() < src[0] - tol or t.max() > src[-1] + tol:
        raise ValueError(f"cannot extrapolate trace on [{src[0]}, {src[-1]}] to [{t.min()}, {t.max()}]")
    if len(t) == len(src) and np.array_equal(t, src):
        return BoundaryTrace(src.copy(), trace.left.copy(), trace.right.copy())
    left = np.column_stack([np.interp(t, src, trace.left[:, i]) for i in range(2)])
    right = np.column_stack([np.interp(t, src, trace.right[:, i]) for i in range(2)])
    return BoundaryTrace(t, left, right)
