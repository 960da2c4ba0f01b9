"""riverbed command line: generate, invert, accuracy, taylor, lcurve.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import default_config, dump_config, load_config
from .errors import NumericalError
from .forward import read_trace_csv, write_trace_csv
from .objective import write_cost_history
from .optimizer import IterationError, write_recovered

log = logging.getLogger("riverbed")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument("--case", help="case id (used when no --config is given)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--eta-meas", type=float)
    common.add_argument("--eta-p", type=float)
    common.add_argument("--iters", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="riverbed", description="DG shallow-water bottom inversion experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="synthetic noisy boundary data")
    inv = sub.add_parser("invert", parents=[common], help="run the splitting inversion")
    inv.add_argument("--data", type=Path, help="measured trace CSV (default: generate)")
    inv.add_argument("--no-plots", action="store_true")
    acc = sub.add_parser("accuracy", parents=[common], help="forward self-convergence table")
    acc.add_argument("--degrees", type=int, nargs="+", default=[0, 1, 2])
    acc.add_argument("--cells", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    tay = sub.add_parser("taylor", parents=[common], help="Taylor remainder gradient check")
    tay.add_argument("--direction", choices=ex.DIRECTIONS)
    tay.add_argument("--k0", type=float)
    tay.add_argument("--halvings", type=int)
    lc = sub.add_parser("lcurve", parents=[common], help="sweep gamma_hat = 10^i")
    lc.add_argument("--exponents", type=int, nargs=2, default=[-5, 5], metavar=("LO", "HI"))
    return p


def resolve_config(args, default_case="a"):
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    else:
        cfg = default_config(args.case or default_case)
    if args.case and args.config is not None and args.case != cfg.case_id:
        raise UsageError("--case conflicts with the case in --config")
    noise = cfg.noise
    for flag, attr in (("seed", "seed"), ("eta_meas", "eta_meas"), ("eta_p", "eta_p")):
        v = getattr(args, flag)
        if v is not None:
            noise = replace(noise, **{attr: v})
    kw = {"noise": noise}
    if args.iters is not None:
        if args.iters < 1:
            raise UsageError("--iters must be at least 1")
        kw["n_iters"] = args.iters
    if args.out is not None:
        kw["out_dir"] = str(args.out)
    return cfg.with_(**kw)


def _outdir(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg, args):
    out = _outdir(cfg)
    trace = ex.measured_data(cfg)
    write_trace_csv(out / "measured.csv", trace)
    info = {"command": "generate", "n_times": len(trace.times),
            "fine_mesh": f"{cfg.fine.n_cells} cells, P{cfg.fine.degree}"}
    dump_config(cfg, out / "measured.meta.toml", info)
    print(f"wrote {out / 'measured.csv'} ({len(trace.times)} times)")


def cmd_invert(cfg, args):
    out = _outdir(cfg)
    if args.data is not None:
        measured = read_trace_csv(args.data)
    else:
        measured = ex.measured_data(cfg)
        write_trace_csv(out / "measured.csv", measured)

    def progress(it, rec, state):
        if it % 50 == 0:
            log.info("iter %d  j0=%.6e  total=%.6e", it, rec.j0, rec.total)

    res, problem = ex.invert(cfg, measured, callback=progress)
    write_cost_history(out / "cost_history.csv", res.history)
    write_recovered(out / "recovered_p.csv", res, cfg.case.p_true)
    ex.write_snapshots_csv(out / "snapshots.csv", problem.control_times, res.snapshots)
    if not args.no_plots:
        from .plotting import plot_recovered, plot_residue

        t = problem.control_times
        plot_recovered(out / "recovered_p.svg", t, np.broadcast_to(cfg.case.p_true(t), t.shape), res.best.p.values,
                       res.p_initial.values, res.best.iteration,
                       {k: v for k, v in res.snapshots.items() if k > 0})
        plot_residue(out / "residue.svg", [r.j0 for r in res.history])
    info = {"command": "invert", "best_iteration": res.best.iteration, "best_j0": res.best.j0,
            "initial_j0": res.history[0].j0}
    dump_config(cfg, out / "run.meta.toml", info)
    print(f"best iterate {res.best.iteration}: j0={res.best.j0:.6e} (initial {res.history[0].j0:.6e})")


def cmd_accuracy(cfg, args):
    out = _outdir(cfg)
    rows = ex.accuracy_table(cfg.case_id, tuple(args.degrees), tuple(args.cells), cfg.final_time)
    ex.write_accuracy_csv(out / "accuracy.csv", rows)
    text = ex.format_accuracy(rows)
    (out / "accuracy.txt").write_text(text + "\n")
    from .plotting import plot_accuracy

    plot_accuracy(out / "accuracy.svg", rows)
    print(text)


def cmd_taylor(cfg, args):
    if args.eta_meas is None:
        cfg = cfg.with_(noise=replace(cfg.noise, eta_meas=0.0))
    tay = cfg.taylor
    if args.k0 is not None:
        tay = replace(tay, k0=args.k0)
    if args.halvings is not None:
        if args.halvings < 1:
            raise UsageError("--halvings must be at least 1")
        tay = replace(tay, n_halvings=args.halvings)
    if args.direction:
        tay = replace(tay, direction=args.direction)
    cfg = cfg.with_(taylor=tay)
    out = _outdir(cfg)
    rep = ex.taylor(cfg)
    rep.to_csv(out / "taylor.csv")
    from .plotting import plot_taylor

    plot_taylor(out / "taylor.svg", rep.k_values, rep.r1, rep.r2)
    dump_config(cfg, out / "taylor.meta.toml", {"command": "taylor", "verdict": rep.verdict()})
    print(rep.verdict())


def cmd_lcurve(cfg, args):
    out = _outdir(cfg)
    lo, hi = args.exponents
    if lo > hi:
        raise UsageError("--exponents LO HI needs LO <= HI")
    pts = ex.lcurve(cfg, range(lo, hi + 1),
                    progress=lambda pt: log.info("gamma_hat=%g j0=%.4e reg=%.4e", pt.gamma_hat, pt.j0, pt.regularizer))
    ex.write_lcurve_csv(out / "lcurve.csv", pts)
    corner = ex.lcurve_corner(pts) if len(pts) >= 3 else None
    from .plotting import plot_lcurve

    plot_lcurve(out / "lcurve.svg", [p.j0 for p in pts], [p.regularizer for p in pts], [p.gamma_hat for p in pts],
                corner)
    info = {"command": "lcurve"}
    if corner is not None:
        info["corner_gamma_hat"] = pts[corner].gamma_hat
        print(f"maximum curvature at gamma_hat={pts[corner].gamma_hat:g}")
    dump_config(cfg, out / "lcurve.meta.toml", info)


COMMANDS = {"generate": cmd_generate, "invert": cmd_invert, "accuracy": cmd_accuracy, "taylor": cmd_taylor,
            "lcurve": cmd_lcurve}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args, default_case="d" if args.command in ("accuracy", "lcurve") else "a")
        t0 = time.perf_counter()
        COMMANDS[args.command](cfg, args)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    except (UsageError, KeyError, ValueError, FileNotFoundError) as exc:
        print(f"riverbed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, IterationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"riverbed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
