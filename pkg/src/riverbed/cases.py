"""Library of test cases: smooth periodic runs (T=0.05) and shock runs (T=0.2).

All cases share the initial state h = 7 + exp(sin 2 pi x), hu = cos 2 pi x and
the bottom components b0 = cos(sin 2 pi x), b1 = sin^2(pi x) on [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .forward import BottomTopography

TWO_PI = 2.0 * np.pi
BETA_SMOOTH = -10000.0
BETA_SHOCK = -700.0


def h_initial(x):
    return 7.0 + np.exp(np.sin(TWO_PI * x))


def hu_initial(x):
    return np.cos(TWO_PI * x)


def b0(x):
    return np.cos(np.sin(TWO_PI * x))


def db0(x):
    return -np.sin(np.sin(TWO_PI * x)) * np.cos(TWO_PI * x) * TWO_PI


def b1(x):
    return np.sin(np.pi * x) ** 2


def db1(x):
    return np.pi * np.sin(TWO_PI * x)


BOTTOM = BottomTopography(b0=b0, b1=b1, db0=db0, db1=db1)


@dataclass(frozen=True)
class ExperimentDefaults:
    learning_rate: float = 0.6
    gamma_l: float = 1e-6
    gamma_h: float = 5e-8
    limiter_data: str = "none"
    limiter_forward: str = "none"


@dataclass(frozen=True)
class CaseSpec:
    case_id: str
    final_time: float
    p_true: Callable
    p_initial: Callable
    description: str
    defaults: ExperimentDefaults = ExperimentDefaults()
    h0: Callable = h_initial
    hu0: Callable = hu_initial
    bottom: BottomTopography = BOTTOM
    domain: tuple = (0.0, 1.0)
    boundary: str = "periodic"

    @property
    def ic(self):
        return (self.h0, self.hu0)


def _bump(center, scale=1.0, beta=BETA_SMOOTH, amp=1.0):
    return lambda t: amp * np.exp(scale * beta * (t - center) ** 2)


def _sum(*terms, const=1.0):
    def f(t):
        t = np.asarray(t, dtype=float)
        return const + sum(term(t) for term in terms)

    return f


def _cases():
    out = {}
    T = 0.05
    osc = lambda t: 3.0 * np.cos(10 * np.pi * np.asarray(t) / T) ** 2 + 0.75  # noqa: E731
    two_bumps_d = _sum(_bump(0.3 * T), _bump(0.7 * T, 2, amp=1.5))
    smooth = {
        "a": (_sum(_bump(T / 3)), _sum(_bump(2 * T / 3)), 5e-8, "bump at T/3 from shifted bump"),
        "b": (_sum(_bump(2 * T / 3)), _sum(_bump(T / 3)), 5e-8, "bump at 2T/3 from shifted bump"),
        "c": (
            _sum(_bump(T / 4, 2), _bump(3 * T / 4, 2)),
            _sum(_bump(T / 2, amp=1.5)),
            1e-8,
            "two equal bumps from one tall bump",
        ),
        "d": (two_bumps_d, osc, 5e-8, "two unequal bumps from oscillatory guess"),
        "e": (_sum(_bump(0.3 * T, amp=1.5), _bump(0.7 * T, 2)), osc, 5e-8, "mirrored two bumps"),
        "f": (
            _sum(_bump(T / 4, 4), _bump(T / 2, 4, amp=1.5), _bump(3 * T / 4, 4, amp=-0.5)),
            osc,
            5e-9,
            "two crests and a trough",
        ),
    }
    for key, (pt, p0, gh, desc) in smooth.items():
        out[key] = CaseSpec(key, T, pt, p0, desc, ExperimentDefaults(gamma_h=gh))
    # Case d with the smaller H1 weight
    out["d_lowh1"] = CaseSpec("d_lowh1", T, two_bumps_d, osc, "case d with gamma_H=1e-8",
                              ExperimentDefaults(gamma_h=1e-8))

    guesses = {
        "3a": (lambda t: np.ones_like(np.asarray(t, dtype=float)), "constant guess"),
        "3b": (lambda t: 4.0 * np.sin(np.pi * np.asarray(t) / T) ** 2, "4 sin^2 guess"),
        "3c": (lambda t: -2.0 * np.sin(np.pi * np.asarray(t) / T) ** 2 + 2.0, "2 - 2 sin^2 guess"),
        "3d": (osc, "oscillatory guess"),
    }
    for key, (p0, desc) in guesses.items():
        out[key] = CaseSpec(key, T, two_bumps_d, p0, desc, ExperimentDefaults(gamma_h=1e-8))

    ablation = {"5a": (0.0, 5e-8), "5b": (1e-6, 0.0), "5c": (0.0, 0.0)}
    for key, (gl, gh) in ablation.items():
        out[key] = CaseSpec(key, T, two_bumps_d, osc, f"case d with gamma_L={gl}, gamma_H={gh}",
                            ExperimentDefaults(gamma_l=gl, gamma_h=gh))

    Ts = 0.2
    # step rescaled to the exact-gradient magnitude (about 0.28x of the dirichlet-closure one)
    shock_defaults = ExperimentDefaults(learning_rate=0.005, gamma_l=1e-4, gamma_h=1e-6,
                                        limiter_data="minmod", limiter_forward="weno")
    one = lambda t: np.ones_like(np.asarray(t, dtype=float))  # noqa: E731
    out["4a"] = CaseSpec("4a", Ts, _sum(_bump(Ts / 2, beta=BETA_SHOCK)), one, "centered bump, shocks",
                         shock_defaults)
    out["4b"] = CaseSpec(
        "4b",
        Ts,
        _sum(_bump(Ts / 4, 4, BETA_SHOCK), _bump(Ts / 2, 4, BETA_SHOCK, 1.5), _bump(3 * Ts / 4, 4, BETA_SHOCK, -0.5)),
        one,
        "two crests and a trough, shocks",
        shock_defaults,
    )
    return out


CASES = _cases()


def get_case(case_id: str) -> CaseSpec:
    try:
        return CASES[case_id]
    except KeyError:
        raise KeyError(f"unknown case {case_id!r}; known: {', '.join(sorted(CASES))}") from None
