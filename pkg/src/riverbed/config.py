"""Experiment configuration: one TOML file per run, CLI flags layered on top."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import tomli
import tomli_w

from .cases import get_case
from .forward import SolverConfig
from .measurement import NoiseSpec
from .optimizer import RegularizationParams

_SOLVER_KEYS = ("degree", "n_cells", "cfl", "limiter", "tvb_m")


@dataclass(frozen=True)
class TaylorSettings:
    k0: float = 1e-2
    n_halvings: int = 5
    direction: str = "bump"


@dataclass(frozen=True)
class ExperimentConfig:
    case_id: str
    fine: SolverConfig
    forward: SolverConfig
    adjoint: SolverConfig
    noise: NoiseSpec = NoiseSpec()
    regularization: RegularizationParams = RegularizationParams()
    learning_rate: float = 0.6
    relaxation: float = 1.0
    n_iters: int = 1000
    out_dir: str = "runs"
    snapshot_every: int = 50
    taylor: TaylorSettings = field(default_factory=TaylorSettings)

    @property
    def case(self):
        return get_case(self.case_id)

    @property
    def final_time(self) -> float:
        return self.forward.final_time

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def default_config(case_id: str, **overrides) -> ExperimentConfig:
    """Standard setup for a case: 400/P3 data, 50/P2 forward, 25/P1 adjoint."""
    case = get_case(case_id)
    d = case.defaults
    T = case.final_time
    x0, xL = case.domain
    cfg = ExperimentConfig(
        case_id=case_id,
        fine=SolverConfig(3, 400, T, limiter=d.limiter_data, x0=x0, xL=xL),
        forward=SolverConfig(2, 50, T, limiter=d.limiter_forward, x0=x0, xL=xL),
        adjoint=SolverConfig(1, 25, T, x0=x0, xL=xL),
        regularization=RegularizationParams(d.gamma_l, d.gamma_h),
        learning_rate=d.learning_rate,
        out_dir=f"runs/{case_id}",
    )
    return cfg.with_(**overrides) if overrides else cfg


def _solver_table(cfg: SolverConfig) -> dict:
    out = {k: getattr(cfg, k) for k in _SOLVER_KEYS if getattr(cfg, k) is not None}
    if cfg.gravity != SolverConfig.__dataclass_fields__["gravity"].default:
        out["gravity"] = cfg.gravity
    return out


def to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "case": cfg.case_id,
        "final_time": cfg.final_time,
        "domain": [cfg.forward.x0, cfg.forward.xL],
        "out": cfg.out_dir,
        "learning_rate": cfg.learning_rate,
        "relaxation": cfg.relaxation,
        "n_iters": cfg.n_iters,
        "snapshot_every": cfg.snapshot_every,
        "noise": asdict(cfg.noise),
        "regularization": asdict(cfg.regularization),
        "mesh": {
            "fine": _solver_table(cfg.fine),
            "forward": _solver_table(cfg.forward),
            "adjoint": _solver_table(cfg.adjoint),
        },
        "taylor": asdict(cfg.taylor),
    }


def _pick(cls, table: dict, where: str):
    names = {f.name for f in fields(cls)}
    extra = set(table) - names
    if extra:
        raise ValueError(f"unknown keys in [{where}]: {', '.join(sorted(extra))}")
    return cls(**table)


def from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    data.pop("run", None)  # result summary written next to outputs
    if "case" not in data:
        raise ValueError("config needs a 'case' key")
    base = default_config(data.pop("case"))
    T = float(data.pop("final_time", base.final_time))
    x0, xL = data.pop("domain", [base.forward.x0, base.forward.xL])
    meshes = data.pop("mesh", {})
    solvers = {}
    for name in ("fine", "forward", "adjoint"):
        cur = getattr(base, name)
        tab = dict(meshes.pop(name, {}))
        unknown = set(tab) - set(_SOLVER_KEYS) - {"gravity"}
        if unknown:
            raise ValueError(f"unknown keys in [mesh.{name}]: {', '.join(sorted(unknown))}")
        solvers[name] = cur.with_(final_time=T, x0=float(x0), xL=float(xL), **tab)
    if meshes:
        raise ValueError(f"unknown mesh sections: {', '.join(sorted(meshes))}")
    kw = {}
    if "noise" in data:
        kw["noise"] = _pick(NoiseSpec, data.pop("noise"), "noise")
    if "regularization" in data:
        kw["regularization"] = _pick(RegularizationParams, data.pop("regularization"), "regularization")
    if "taylor" in data:
        kw["taylor"] = _pick(TaylorSettings, data.pop("taylor"), "taylor")
    simple = {"out": "out_dir", "learning_rate": "learning_rate", "relaxation": "relaxation",
              "n_iters": "n_iters", "snapshot_every": "snapshot_every"}
    for key, attr in simple.items():
        if key in data:
            kw[attr] = data.pop(key)
    if data:
        raise ValueError(f"unknown config keys: {', '.join(sorted(data))}")
    return base.with_(**solvers, **kw)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return from_dict(tomli.load(fh))


def dump_config(cfg: ExperimentConfig, path, run_info: dict | None = None):
    data = to_dict(cfg)
    if run_info:
        data["run"] = run_info
    Path(path).write_text(tomli_w.dumps(data))
