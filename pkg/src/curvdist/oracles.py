"""Constant-curvature surfaces with closed-form distances, used as ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold as rm
from .manifold import DEFAULT_CONFIG, GeodesicSolverConfig, ManifoldChart, MetricData
from .model_spaces import cc_distance, summarize_pair

POLE_MARGIN = 0.1


class EuclideanChart(ManifoldChart):
    def __init__(self, dim: int = 2):
        self.dim = dim

    def in_domain(self, q):
        return np.ones(np.shape(q)[:-1], dtype=bool)

    def metric(self, q, order: int = 2) -> MetricData:
        n = self.dim
        eye = np.eye(n)
        return MetricData(g=eye, g_inv=eye, dg=np.zeros((n,) * 3), d2g=np.zeros((n,) * 4))

    def hamiltonian_field(self, q, p):
        return p.copy(), np.zeros_like(p)

    def distance(self, p, q) -> float:
        return float(np.linalg.norm(np.asarray(p) - np.asarray(q)))


class SphereChart(ManifoldChart):
    """Polar chart (theta, phi) of the sphere of radius ``radius``."""

    dim = 2

    def __init__(self, radius: float = 1.0):
        self.radius = radius

    def in_domain(self, q):
        theta = np.asarray(q)[..., 0]
        return (theta > POLE_MARGIN) & (theta < np.pi - POLE_MARGIN)

    def metric(self, q, order: int = 2) -> MetricData:
        theta = q[0]
        r2 = self.radius**2
        s, c = np.sin(theta), np.cos(theta)
        g = np.diag([r2, r2 * s * s])
        g_inv = np.diag([1 / r2, 1 / (r2 * s * s)])
        dg = np.zeros((2, 2, 2))
        dg[1, 1, 0] = r2 * 2 * s * c
        d2g = np.zeros((2, 2, 2, 2))
        d2g[1, 1, 0, 0] = r2 * 2 * np.cos(2 * theta)
        return MetricData(g=g, g_inv=g_inv, dg=dg, d2g=d2g)

    def hamiltonian_field(self, q, p):
        r2 = self.radius**2
        s, c = np.sin(q[:, 0]), np.cos(q[:, 0])
        dq = np.stack([p[:, 0] / r2, p[:, 1] / (r2 * s * s)], axis=1)
        dp = np.stack([p[:, 1] ** 2 * c / (r2 * s**3), np.zeros_like(s)], axis=1)
        return dq, dp

    def embed(self, q):
        theta, phi = q
        return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])

    def distance(self, p, q) -> float:
        a, b = self.embed(p), self.embed(q)
        return self.radius * float(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b))


class HalfPlaneChart(ManifoldChart):
    """Upper half-plane with metric (radius / y)^2 I, curvature -1/radius^2."""

    dim = 2

    def __init__(self, radius: float = 1.0):
        self.radius = radius

    def in_domain(self, q):
        return np.asarray(q)[..., 1] > 0

    def metric(self, q, order: int = 2) -> MetricData:
        y = q[1]
        r2 = self.radius**2
        eye = np.eye(2)
        dg = np.zeros((2, 2, 2))
        dg[:, :, 1] = -2 * r2 / y**3 * eye
        d2g = np.zeros((2, 2, 2, 2))
        d2g[:, :, 1, 1] = 6 * r2 / y**4 * eye
        return MetricData(g=r2 / y**2 * eye, g_inv=y**2 / r2 * eye, dg=dg, d2g=d2g)

    def hamiltonian_field(self, q, p):
        r2 = self.radius**2
        y = q[:, 1:2]
        dq = y**2 * p / r2
        dp = np.zeros_like(p)
        dp[:, 1] = -q[:, 1] * np.einsum("bi,bi->b", p, p) / r2
        return dq, dp

    def distance(self, p, q) -> float:
        (x1, y1), (x2, y2) = p, q
        arg = ((x1 - x2) ** 2 + (y1 - y2) ** 2) / (2 * y1 * y2)
        # arccosh(1 + x) written to keep precision for small x
        return self.radius * float(np.log1p(arg + np.sqrt(arg * (arg + 2))))


@dataclass(frozen=True)
class ConstantCurvatureChart:
    k: float
    chart: ManifoldChart

    @property
    def base_point(self) -> np.ndarray:
        """A convenient interior point (equator, origin, or (0, 1))."""
        if isinstance(self.chart, SphereChart):
            return np.array([np.pi / 2, 0.0])
        if isinstance(self.chart, HalfPlaneChart):
            return np.array([0.0, 1.0])
        return np.zeros(self.chart.dim)


def constant_curvature_chart(k: float) -> ConstantCurvatureChart:
    if k > 0:
        return ConstantCurvatureChart(k, SphereChart(k**-0.5))
    if k < 0:
        return ConstantCurvatureChart(k, HalfPlaneChart((-k) ** -0.5))
    return ConstantCurvatureChart(0.0, EuclideanChart(2))


def exact_cc_distance(cckt: ConstantCurvatureChart, p, q) -> float:
    p = cckt.chart.check(p)
    q = cckt.chart.check(q)
    return cckt.chart.distance(p, q)


def orthonormal_frame(cckt: ConstantCurvatureChart, x) -> np.ndarray:
    """Rows are a g-orthonormal basis of the tangent space at ``x``."""
    g = cckt.chart.metric(np.asarray(x, dtype=float), order=0).g
    return np.diag(1 / np.sqrt(np.diag(g)))


@dataclass(frozen=True)
class ConsistencyRecord:
    via_closed_form: float
    via_exact: float
    via_bvp: float
    converged: bool = True

    @property
    def spread(self) -> float:
        vals = (self.via_closed_form, self.via_exact, self.via_bvp)
        return max(vals) - min(vals)


def oracle_consistency(
    cckt: ConstantCurvatureChart, x, u, v, cfg: GeodesicSolverConfig = DEFAULT_CONFIG
) -> ConsistencyRecord:
    """Three independent routes to dist(exp_x(u), exp_x(v))."""
    chart = cckt.chart
    x = chart.check(x)
    md = chart.metric(x)
    Rt = rm.curvature_tensor(chart, x, cfg)
    via_closed_form = cc_distance(summarize_pair(md, Rt, u, v))
    y, z = rm.exp(chart, x, u, cfg), rm.exp(chart, x, v, cfg)
    via_exact = exact_cc_distance(cckt, y, z)
    converged = True
    try:
        w = rm.log(chart, y, z, cfg)
    except rm.ConvergenceError as exc:
        w, converged = exc.best, False
    via_bvp = chart.metric(y, order=0).norm(w)
    return ConsistencyRecord(via_closed_form, via_exact, via_bvp, converged)
