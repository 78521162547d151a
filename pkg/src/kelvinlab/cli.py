"""Command-line entry point: ``kelvinlab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _emit(obj, out):
    text = json.dumps(obj, indent=1)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_vstate(a):
    from .output import write_svg
    from .vstate import beta_max, continuation, solve_kelvin

    if a.beta > beta_max(a.m):
        w = continuation(a.m, a.beta, a.steps, a.modes or 32)[-1]
    else:
        w = solve_kelvin(a.m, a.beta, a.modes or 16)
    if a.svg:
        write_svg(a.svg, [w.contour(512)], title=f"m={a.m} beta={a.beta:g}")
    _emit(w.to_dict(), a.out)


def cmd_spectrum(a):
    from .output import write_table
    from .spectral import assemble_linearized, constrained_spectrum, constraint_set
    from .vstate import solve_kelvin

    w = solve_kelvin(a.m, a.beta)
    L = assemble_linearized(w, a.n)
    eig = constrained_spectrum(L, constraint_set(a.m, a.n, m_fold=not a.unrestricted))
    if a.csv:
        write_table(a.csv, ["index", "eigenvalue"], [(i, float(e)) for i, e in enumerate(eig)])
    _emit({
        "m": a.m, "beta": a.beta, "n": a.n, "m_fold": not a.unrestricted,
        "max_eig": float(eig[0]),
        "eigs": [float(e) for e in eig[:10]],
        "I0_range": [float(L.I0_values.min()), float(L.I0_values.max())],
    }, a.out)


def cmd_annulus(a):
    from .annulus import build_annulus, coercivity_threshold, mode_max_eigenvalue, sample_stream
    from .output import write_table

    model = build_annulus(a.r1, a.r2)
    thr = coercivity_threshold(model)
    if a.csv:
        r, g, psi = sample_stream(model)
        write_table(a.csv, ["r", "G", "psi"], zip(r, g, psi))
    _emit({
        "r1": a.r1, "r2": a.r2, "C1": model.C1, "rstar": model.rstar,
        "slope_inner": model.slope_inner, "slope_outer": model.slope_outer,
        "threshold_m": thr,
        "mode_max_eigenvalues": {str(n): mode_max_eigenvalue(model, n) for n in range(1, a.modes + 1)},
    }, a.out)


def _run_config(cfg_dict, outroot, svg=True):
    from .experiments import ExperimentConfig, run_experiment, timestamped_dir

    cfg = ExperimentConfig.from_dict(cfg_dict)
    rec = run_experiment(cfg)
    outdir = rec.write(timestamped_dir(outroot, cfg.kind), svg=svg)
    return rec, outdir


def cmd_experiment(a):
    cfg = json.loads(Path(a.config).read_text())
    rec, outdir = _run_config(cfg, a.outdir, not a.no_svg)
    _emit({"outdir": str(outdir), "verdicts": rec.verdicts, "wall_time": rec.wall_time}, None)


def cmd_sweep(a):
    from .experiments import ExperimentConfig, sweep
    from .output import write_table

    cfgs = json.loads(Path(a.config).read_text())
    if not isinstance(cfgs, list):
        raise SystemExit("sweep config must be a JSON array of experiment configs")
    rows = sweep([ExperimentConfig.from_dict(c) for c in cfgs], workers=a.workers)
    if a.csv:
        keys = sorted({k for r in rows for k in r})
        write_table(a.csv, keys, [[r.get(k, "") for k in keys] for r in rows])
    _emit(rows, a.out)


def cmd_field(a):
    from .field import evaluate_csv
    from .geometry import NodeContour

    data = json.loads(Path(a.contour).read_text())
    evaluate_csv(NodeContour.from_json(data, smooth=a.smooth), a.points, a.dst)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kelvinlab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("vstate", help="solve an m-fold Kelvin wave")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--modes", type=int, help="Fourier modes (default 16, or 32 beyond the direct-solve range)")
    s.add_argument("--steps", type=int, default=10, help="continuation steps for large beta")
    s.add_argument("--svg")
    s.add_argument("--out")
    s.set_defaults(func=cmd_vstate)

    s = sub.add_parser("spectrum", help="constrained spectrum of the linearized energy")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--unrestricted", action="store_true", help="admit modes that are not multiples of m")
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("annulus", help="annulus constants, critical radius and threshold")
    s.add_argument("--r1", type=float, required=True)
    s.add_argument("--r2", type=float, required=True)
    s.add_argument("--modes", type=int, default=32)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_annulus)

    s = sub.add_parser("experiment", help="run one experiment config")
    s.add_argument("--config", required=True)
    s.add_argument("--outdir", default="runs")
    s.add_argument("--no-svg", action="store_true")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("sweep", help="run a JSON array of experiment configs")
    s.add_argument("--config", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("field", help="evaluate stream and velocity at points from a CSV")
    s.add_argument("--contour", required=True, help="JSON [[x, y], ...]")
    s.add_argument("--points", required=True, help="CSV with columns x,y")
    s.add_argument("--dst", required=True)
    s.add_argument("--smooth", action="store_true", help="nodes sample a smooth curve")
    s.set_defaults(func=cmd_field)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.set_printoptions(precision=6)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
