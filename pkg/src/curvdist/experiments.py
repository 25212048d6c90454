"""Dataset synthesis and the two reference experiments (curve families, random shapes)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from . import manifold as rm
from .analysis import classical_mds, curvature_histogram, error_stats, procrustes_distance
from .landmarks import GaussianKernel, LandmarkChart, LandmarkConfig
from .manifold import GeodesicSolverConfig
from .model_spaces import TangentPairSummary, cc_distance, taylor2_sq_from_summary
from .pipeline import Dataset, approx_distance_matrix, exact_distance_matrix, register

TRAPEZOID = np.array([[0.0, 0.0], [1.0, 0.0], [0.8, 1.0], [0.2, 1.0]])
PRESETS = {"trapezoid": TRAPEZOID}
MAX_RESAMPLE = 10

CURVE_CURVATURES = (-1.0, -0.5, 0.0, 0.5, 1.0)


def resolve_template(template) -> LandmarkConfig:
    if isinstance(template, LandmarkConfig):
        return template
    if isinstance(template, str):
        if template not in PRESETS:
            raise ValueError(f"unknown template preset {template!r}")
        return LandmarkConfig.from_points(PRESETS[template])
    return LandmarkConfig.from_points(np.asarray(template, dtype=float))


@dataclass
class ExperimentConfig:
    template: object = "trapezoid"
    n: int = 20
    noise_scale: float = 0.5
    sigma: float = 0.4
    seed: int = 0
    methods: tuple[str, ...] = ("first", "cc")
    solver: GeodesicSolverConfig = field(default_factory=GeodesicSolverConfig)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.noise_scale > 0 or not self.sigma > 0:
            raise ValueError("noise_scale and sigma must be positive")

    def chart(self) -> LandmarkChart:
        t = resolve_template(self.template)
        return LandmarkChart(GaussianKernel(self.sigma), t.d, t.m)


def synthesize(cfg: ExperimentConfig):
    """Random shapes ``exp_template(v_i)`` with ``v_i ~ N(0, c G_template)``.

    Draws come from ``numpy.random.default_rng(seed)`` (PCG64). A draw whose
    geodesic leaves the landmark domain (or ends at a nearly
    singular co-metric) is replaced, at most
    ``MAX_RESAMPLE`` times per sample. Returns ``(dataset, tangents)``.
    """
    template = resolve_template(cfg.template)
    chart = cfg.chart()
    g = chart.metric(template.coords, order=0).g
    L = np.linalg.cholesky(cfg.noise_scale * g)
    rng = np.random.default_rng(cfg.seed)
    points, tangents = [], []
    for i in range(cfg.n):
        for _ in range(MAX_RESAMPLE + 1):
            v = L @ rng.standard_normal(chart.dim)
            try:
                q = rm.exp(chart, template.coords, v, cfg.solver)
                chart.metric(q, order=0)
            except (rm.DomainError, rm.MetricError):
                continue
            points.append(q)
            tangents.append(v)
            break
        else:
            raise rm.DomainEscapeError(f"sample {i}: no admissible draw after {MAX_RESAMPLE} retries", None)
    labels = [f"q{i}" for i in range(cfg.n)]
    return Dataset(np.array(points), labels), np.array(tangents)


def curvature_curves(ks=CURVE_CURVATURES, phi: float = math.pi / 6, ts=None):
    """Signed Taylor and constant-curvature distances along ``t u``, ``t v``.

    ``u``, ``v`` are unit vectors at angle ``phi``. The Taylor column is
    ``sign(x) sqrt(|x|)`` of the squared Taylor value ``x``.
    """
    if ts is None:
        ts = np.linspace(0.0, math.pi, 201)
    columns = ["t"]
    for k in ks:
        columns += [f"taylor2_k={k:g}", f"cc_k={k:g}"]
    rows = []
    for t in ts:
        row = [t]
        for k in ks:
            s = TangentPairSummary(t, t, math.cos(phi), k)
            x = taylor2_sq_from_summary(s)
            row += [math.copysign(math.sqrt(abs(x)), x), cc_distance(s)]
        rows.append(row)
    return columns, np.array(rows)


def _stats_payload(stats):
    return {
        "mean_signed": stats.mean_signed,
        "mean_abs": stats.mean_abs,
        "variance": stats.variance,
        "variance_abs": stats.variance_abs,
        "max_abs": stats.max_abs,
        "pairs": stats.pairs,
        "excluded_pairs": stats.excluded,
    }


def _write_histogram(path, hist):
    rows = [(lo, hi, c) for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts)]
    io.write_table(path, ["lo", "hi", "count"], rows)


def run_experiment(cfg: ExperimentConfig, outdir) -> dict:
    """Random-shape experiment: exact vs approximate matrices, statistics and MDS.

    Every artifact written to ``outdir`` is a deterministic function of the
    config; timings are deliberately kept out of the files.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    template = resolve_template(cfg.template)
    chart = cfg.chart()
    solver = cfg.solver

    dataset, _ = synthesize(cfg)
    io.write_dataset(out / "dataset.txt", dataset, template.d, template.m, cfg.sigma, template.coords)

    reg = register(dataset, template.coords, chart, solver)
    matrices = {}
    for method in cfg.methods:
        matrices[method] = approx_distance_matrix(reg, chart, method, solver)
    fallback = matrices.get("first") or approx_distance_matrix(reg, chart, "first", solver)
    matrices["exact"] = exact_distance_matrix(dataset, chart, solver, fallback=fallback, registration=reg)
    for method, dm in matrices.items():
        io.write_distance_matrix(out / f"distances_{method}.csv", dm)

    exact = matrices["exact"]
    curv = curvature_histogram(reg, chart)
    _write_histogram(out / "curvature_histogram.csv", curv.histogram)

    dim = min(2, dataset.n - 1)
    embeddings = {name: classical_mds(dm, dim) for name, dm in matrices.items()}
    for name, emb in embeddings.items():
        io.write_matrix(out / f"mds_{name}.csv", emb.points, f"mds,source={name},dim={dim}")

    report = {
        "config": {
            "n": cfg.n,
            "noise_scale": cfg.noise_scale,
            "sigma": cfg.sigma,
            "seed": cfg.seed,
            "template": [float(x) for x in template.coords],
            "steps": solver.steps,
            "bvp_tol": solver.bvp_tol,
        },
        "bvp_count": {name: dm.bvp_count for name, dm in matrices.items()},
        "registration_nonconverged": [int(i) for i in np.flatnonzero(~reg.converged)],
        "exact_nonconverged_pairs": int(np.triu(exact.nonconverged, 1).sum()),
        "curvature": {
            "mean": curv.mean,
            "min": float(curv.values.min()) if curv.values.size else None,
            "max": float(curv.values.max()) if curv.values.size else None,
            "skipped": curv.skipped,
        },
        "errors": {},
        "procrustes_to_exact": {},
    }
    for method in cfg.methods:
        stats = error_stats(exact, matrices[method])
        report["errors"][method] = _stats_payload(stats)
        _write_histogram(out / f"error_histogram_{method}.csv", stats.histogram)
        report["procrustes_to_exact"][method] = procrustes_distance(embeddings[method], embeddings["exact"])
    if "taylor2" in matrices:
        report["taylor2_negative_pairs"] = int(np.triu(matrices["taylor2"].negativity_flags, 1).sum())
    io.write_json(out / "report.json", report)
    return report
