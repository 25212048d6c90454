"""Command-line driver: ``curvdist {synth,distmat,mds,fig1,experiment}``.

Every command fails with exit status 1 and a single JSON object
``{"error": <kind>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from . import manifold as rm
from .analysis import classical_mds
from .experiments import CURVE_CURVATURES, PRESETS, ExperimentConfig, curvature_curves, resolve_template, run_experiment, synthesize
from .landmarks import GaussianKernel, LandmarkChart
from .manifold import GeodesicSolverConfig
from .pipeline import approx_distance_matrix, exact_distance_matrix, karcher_mean, register

logger = logging.getLogger("curvdist")


def _solver(args) -> GeodesicSolverConfig:
    return GeodesicSolverConfig(steps=args.steps, bvp_tol=args.bvp_tol)


def _read_template(source: str):
    """A preset name or a text file of whitespace-separated coordinates, one landmark per line."""
    if source in PRESETS:
        return resolve_template(source)
    path = Path(source)
    if not path.exists():
        raise FileNotFoundError(f"template {source!r} is neither a preset nor a file")
    rows = [ln.split() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    return resolve_template(np.array(rows, dtype=float))


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        template=_read_template(args.template),
        n=args.n,
        noise_scale=args.noise_scale,
        sigma=args.sigma,
        seed=args.seed,
        solver=_solver(args),
    )


def cmd_synth(args) -> dict:
    cfg = _config(args)
    template = resolve_template(cfg.template)
    dataset, _ = synthesize(cfg)
    io.write_dataset(args.out, dataset, template.d, template.m, cfg.sigma, template.coords)
    return {"out": str(args.out), "n": dataset.n}


def cmd_distmat(args) -> dict:
    dataset, header = io.read_dataset(args.input)
    sigma = args.sigma if args.sigma is not None else header["sigma"]
    chart = LandmarkChart(GaussianKernel(sigma), header["d"], header["m"])
    solver = _solver(args)
    t0 = time.perf_counter()
    rm.bvp_counter.reset()
    if args.template == "mean":
        template = karcher_mean(dataset, chart, solver)
    elif args.template is None:
        if "template" not in header:
            raise ValueError("dataset has no template; pass --template")
        template = header["template"]
    else:
        template = _read_template(args.template).coords
    reg = register(dataset, template, chart, solver)
    if args.method == "exact":
        fallback = approx_distance_matrix(reg, chart, "first", solver)
        dm = exact_distance_matrix(dataset, chart, solver, fallback=fallback, registration=reg)
    else:
        dm = approx_distance_matrix(reg, chart, args.method, solver)
    wall = time.perf_counter() - t0
    io.write_distance_matrix(args.out, dm)
    report = {
        "method": dm.method,
        "n": dm.n,
        "bvp_count": dm.bvp_count,
        "bvp_total": rm.bvp_counter.value,
        "wall_time_s": wall,
        "registration_nonconverged": [int(i) for i in np.flatnonzero(~reg.converged)],
        "nonconverged_pairs": [[int(i), int(j)] for i, j in zip(*np.nonzero(np.triu(dm.nonconverged, 1)))]
        if dm.nonconverged is not None
        else [],
    }
    if dm.negativity_flags is not None:
        report["taylor2_negative_pairs"] = int(np.triu(dm.negativity_flags, 1).sum())
    io.write_json(Path(str(args.out) + ".report.json"), report)
    return report


def cmd_mds(args) -> dict:
    dm = io.read_distance_matrix(args.input)
    emb = classical_mds(dm, args.dim)
    io.write_matrix(args.out, emb.points, f"mds,source={dm.method},dim={args.dim}")
    return {"out": str(args.out), "eigenvalues": [float(x) for x in emb.eigenvalues]}


def cmd_fig1(args) -> dict:
    ts = np.linspace(0.0, args.t_max, args.points)
    columns, table = curvature_curves(args.k, args.phi, ts)
    io.write_table(args.out, columns, table)
    return {"out": str(args.out), "rows": len(table), "columns": columns}


def cmd_experiment(args) -> dict:
    cfg = _config(args)
    cfg.methods = tuple(args.methods)
    report = run_experiment(cfg, args.out)
    return {"out": str(args.out), "errors": report["errors"], "procrustes_to_exact": report["procrustes_to_exact"]}


def _add_solver_flags(p):
    p.add_argument("--steps", type=int, default=100, help="RK4 steps per unit-time geodesic")
    p.add_argument("--bvp-tol", type=float, default=1e-9, help="shooting tolerance (max-norm, relative)")


def _add_synth_flags(p):
    p.add_argument("--template", default="trapezoid", help="preset name or coordinate file")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--noise-scale", type=float, default=0.5, help="c in the covariance c*G")
    p.add_argument("--sigma", type=float, default=ExperimentConfig.sigma, help="Gaussian kernel width")
    p.add_argument("--seed", type=int, default=0)


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvdist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="sample random shapes around a template")
    _add_synth_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("distmat", help="pairwise distance matrix of a dataset")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--method", choices=("exact", "first", "taylor2", "cc"), default="cc")
    p.add_argument("--template", default=None, help="preset, coordinate file or 'mean' (default: dataset header)")
    p.add_argument("--sigma", type=float, default=None, help="kernel width (default: dataset header)")
    _add_solver_flags(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("mds", help="classical MDS embedding of a distance matrix")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("fig1", help="Taylor vs constant-curvature curves along t*u, t*v")
    p.add_argument("--k", type=_float_list, default=list(CURVE_CURVATURES), help="comma-separated curvatures")
    p.add_argument("--phi", type=float, default=math.pi / 6)
    p.add_argument("--t-max", type=float, default=math.pi)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("experiment", help="random-shape comparison of exact and approximate distances")
    _add_synth_flags(p)
    _add_solver_flags(p)
    p.add_argument("--methods", nargs="+", choices=("first", "taylor2", "cc"), default=["first", "cc"])
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except Exception as exc:  # reported as one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
