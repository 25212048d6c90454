"""Pairwise distance matrices from one registration per sample."""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import manifold as rm
from .manifold import DEFAULT_CONFIG, GeodesicSolverConfig, ManifoldChart
from .model_spaces import pair_distance

logger = logging.getLogger(__name__)

MEAN_TOL = 1e-8
MEAN_MAX_ITER = 50


class MeanError(rm.GeometryError):
    def __init__(self, message, sample=None, estimate=None):
        super().__init__(message)
        self.sample = sample
        self.estimate = estimate


@dataclass
class Dataset:
    """``n`` points of a chart, stored as flat coordinate rows."""

    points: np.ndarray
    labels: list[str] | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[0] < 2:
            raise ValueError("a dataset needs at least two configurations")
        if self.labels is not None and len(self.labels) != len(self.points):
            raise ValueError("one label per configuration is required")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.points)


@dataclass
class Registration:
    template: np.ndarray
    tangents: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    bvp_count: int = 0

    @property
    def n(self) -> int:
        return self.tangents.shape[0]


@dataclass
class DistanceMatrix:
    values: np.ndarray
    method: str
    bvp_count: int = 0
    negativity_flags: np.ndarray | None = None
    nonconverged: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def upper(self) -> np.ndarray:
        return self.values[np.triu_indices(self.n, 1)]


def karcher_mean(
    dataset: Dataset,
    chart: ManifoldChart,
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
    init=None,
) -> np.ndarray:
    """Riemannian center of mass by the usual fixed-point iteration.

    Starts from the coordinate-wise mean unless ``init`` is given.
    """
    mean = chart.check(dataset.points.mean(axis=0) if init is None else init)
    for _ in range(MEAN_MAX_ITER):
        logs = np.empty_like(dataset.points)
        for i, q in enumerate(dataset.points):
            try:
                logs[i] = rm.log(chart, mean, q, cfg)
            except rm.ConvergenceError as exc:
                raise MeanError(f"log to sample {i} did not converge", sample=i, estimate=mean) from exc
        step = logs.mean(axis=0)
        if chart.metric(mean, order=0).norm(step) <= MEAN_TOL:
            return mean
        mean = rm.exp(chart, mean, step, cfg)
    raise MeanError("Karcher mean iteration did not converge", estimate=mean)


def register(
    dataset: Dataset,
    template,
    chart: ManifoldChart,
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
) -> Registration:
    """Tangent vectors ``log_template(q_i)``; exactly one BVP per sample."""
    template = chart.check(template)
    n = dataset.n
    tangents = np.zeros((n, chart.dim))
    residuals = np.zeros(n)
    converged = np.ones(n, dtype=bool)
    start = rm.bvp_counter.value
    for i, q in enumerate(dataset.points):
        try:
            tangents[i] = rm.log(chart, template, q, cfg)
        except rm.ConvergenceError as exc:
            logger.warning("registration of sample %d did not converge (residual %.3g)", i, exc.residual)
            tangents[i], residuals[i], converged[i] = exc.best, exc.residual, False
    return Registration(template, tangents, residuals, converged, rm.bvp_counter.value - start)


def approx_distance_matrix(
    reg: Registration,
    chart: ManifoldChart,
    method: str = "cc",
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
) -> DistanceMatrix:
    """Approximate pairwise distances from the tangent vectors at the template.

    The metric and, unless ``method == "first"``, the full curvature tensor
    are evaluated once at the template; no geodesic problems are solved.
    """
    md = chart.metric(reg.template)
    Rt = None if method == "first" else rm.curvature_tensor(chart, reg.template, cfg)
    n = reg.n
    values = np.zeros((n, n))
    negative = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            d, neg = pair_distance(method, md, Rt, reg.tangents[i], reg.tangents[j])
            values[i, j] = values[j, i] = d
            negative[i, j] = negative[j, i] = neg
    bad = ~reg.converged
    return DistanceMatrix(
        values,
        method,
        bvp_count=reg.bvp_count,
        negativity_flags=negative if method == "taylor2" else None,
        nonconverged=bad[:, None] | bad[None, :],
    )


def exact_distance_matrix(
    dataset: Dataset,
    chart: ManifoldChart,
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
    fallback: DistanceMatrix | None = None,
    registration: Registration | None = None,
) -> DistanceMatrix:
    """Geodesic distances from one shooting solve per unordered pair.

    With a converged ``registration`` the solve for ``(i, j)`` is given the
    upper bound ``|v_i| + |v_j|`` (the broken geodesic through the
    template) and a continuation path ``exp_template(v_i + s (v_j - v_i))``,
    so a non-minimizing shot is detected and replaced. A pair whose solve
    fails is flagged; its entry is taken from ``fallback`` when given
    (normally the first-order matrix), else from the best shot found.
    """
    n = dataset.n
    values = np.zeros((n, n))
    bad = np.zeros((n, n), dtype=bool)
    start = rm.bvp_counter.value
    if registration is not None:
        md_t = chart.metric(registration.template, order=0)
        norms = np.array([md_t.norm(v) for v in registration.tangents])
    for i in range(n):
        qi = dataset.points[i]
        gi = chart.metric(qi, order=0)
        for j in range(i + 1, n):
            path = bound = None
            if registration is not None and registration.converged[i] and registration.converged[j]:
                bound = norms[i] + norms[j]
                path = functools.partial(_template_path, chart, registration, i, j, dataset.points[j], cfg)
            try:
                w = rm.log(chart, qi, dataset.points[j], cfg, path=path, max_norm=bound)
                d = gi.norm(w)
            except rm.ConvergenceError as exc:
                logger.warning("pair (%d, %d): %s", i, j, exc)
                bad[i, j] = bad[j, i] = True
                d = fallback.values[i, j] if fallback is not None else gi.norm(exc.best)
            except (rm.DomainError, rm.MetricError) as exc:
                logger.warning("pair (%d, %d) failed: %s", i, j, exc)
                bad[i, j] = bad[j, i] = True
                d = fallback.values[i, j] if fallback is not None else float("nan")
            values[i, j] = values[j, i] = d
    return DistanceMatrix(values, "exact", bvp_count=rm.bvp_counter.value - start, nonconverged=bad)


def _template_path(chart, reg, i, j, y, cfg):
    vi, vj = reg.tangents[i], reg.tangents[j]
    try:
        targets = [rm.exp(chart, reg.template, vi + s * (vj - vi), cfg) for s in rm.CONTINUATION[:-1]]
    except rm.GeometryError:
        return None
    # the final target is the data point itself, not its re-integrated copy
    return targets + [y]
