"""Distance approximations built from tangent data at a single base point.

Given ``u = log_x(y)`` and ``v = log_x(z)``, the squared distance between
``y`` and ``z`` is approximated either by the tangent-space norm, by the
curvature-corrected Taylor polynomial, or by the exact distance on the
two-dimensional constant-curvature surface whose metric and sectional
curvature match ``(u, v)`` at ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .manifold import CurvatureTensor, DependenceError, MetricData, sectional_curvature

Method = Literal["first", "taylor2", "cc"]
METHODS = ("first", "taylor2", "cc")

FLAT_THRESHOLD = 1e-12
LOG_SPACE_ARG = 300.0


@dataclass(frozen=True)
class TangentPairSummary:
    """Norms, angle cosine and sectional curvature of a tangent pair.

    ``k is None`` marks the flat fallback used for degenerate pairs.
    """

    a: float
    b: float
    cos_phi: float
    k: float | None

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("norms must be nonnegative")
        if abs(self.cos_phi) > 1:
            raise ValueError("cos_phi must lie in [-1, 1]")

    @property
    def flat_fallback(self) -> bool:
        return self.k is None


def summarize_pair(md: MetricData, Rt: CurvatureTensor, u, v) -> TangentPairSummary:
    a, b = md.norm(u), md.norm(v)
    if a * b == 0.0:
        return TangentPairSummary(a, b, 1.0, None)
    cos_phi = min(1.0, max(-1.0, md.inner(u, v) / (a * b)))
    try:
        k = sectional_curvature(Rt, md, u, v)
    except DependenceError:
        k = None
    return TangentPairSummary(a, b, cos_phi, k)


def _flat(a, b, cos_phi):
    # (a - b)^2 + 2ab(1 - cos phi): no cancellation when a ~ b and phi ~ 0
    return math.sqrt(max(0.0, (a - b) ** 2 + 2 * a * b * (1 - cos_phi)))


def cc_distance(s: TangentPairSummary) -> float:
    """Distance between exp(u) and exp(v) on the matched constant-curvature surface."""
    a, b, c, k = s.a, s.b, s.cos_phi, s.k
    if k is None or abs(k) * (a + b) ** 2 < FLAT_THRESHOLD:
        return _flat(a, b, c)
    r = abs(k) ** -0.5
    a, b = a / r, b / r
    if k > 0:
        # spherical law of cosines, haversine form:
        # sin^2(d/2) = sin^2((a-b)/2) + sin(a) sin(b) (1 - cos phi) / 2
        h = math.sin(0.5 * (a - b)) ** 2 + math.sin(a) * math.sin(b) * 0.5 * (1 - c)
        return 2 * r * math.asin(math.sqrt(min(1.0, max(0.0, h))))
    if max(a, b) > LOG_SPACE_ARG:
        return r * _hyperbolic_large(a, b, c)
    # D = 1 + cosh(a - b) + (1 - cos phi) sinh(a) sinh(b); distance 2r artanh(sqrt(1 - 2/D))
    dm2 = 2 * math.sinh(0.5 * (a - b)) ** 2 + (1 - c) * math.sinh(a) * math.sinh(b)
    D = 2 + dm2
    x = min(max(dm2 / D, 0.0), 1.0)
    s_ = math.sqrt(x)
    # 2 artanh(s) = log((1 + s)^2 D / 2), finite even when 1 - s underflows
    return r * (2 * math.log1p(s_) + math.log1p(0.5 * dm2))


def _log_sinh(x):
    return x + math.log1p(-math.exp(-2 * x)) - math.log(2) if x > 0 else -math.inf


def _hyperbolic_large(a, b, c):
    # same closed form as above with D - 2 carried as a logarithm
    terms = [math.log(2) + 2 * _log_sinh(0.5 * abs(a - b))]
    if c < 1:
        terms.append(math.log1p(-c) + _log_sinh(a) + _log_sinh(b))
    log_dm2 = float(np.logaddexp.reduce(terms))
    s_ = 1.0 / math.sqrt(1.0 + 2.0 * math.exp(-log_dm2))
    return 2 * math.log1p(s_) + float(np.logaddexp(0.0, log_dm2 - math.log(2)))


def first_order_sq_distance(md: MetricData, u, v) -> float:
    w = np.asarray(u) - np.asarray(v)
    return max(0.0, md.inner(w, w))


def taylor2_sq_distance(md: MetricData, Rt: CurvatureTensor, u, v) -> float:
    """Second-order Taylor value; negative results are returned as is."""
    w = np.asarray(u) - np.asarray(v)
    return md.inner(w, w) - Rt(u, v, v, u) / 3.0


def taylor2_sq_from_summary(s: TangentPairSummary) -> float:
    first = s.a**2 + s.b**2 - 2 * s.a * s.b * s.cos_phi
    if s.k is None:
        return first
    return first - s.k * (s.a * s.b) ** 2 * (1 - s.cos_phi**2) / 3.0


def pair_distance(method: Method, md: MetricData, Rt: CurvatureTensor | None, u, v):
    """Approximate distance and whether the Taylor value went negative."""
    if method == "first":
        return math.sqrt(first_order_sq_distance(md, u, v)), False
    if Rt is None:
        raise ValueError(f"method {method!r} needs the curvature tensor")
    if method == "taylor2":
        sq = taylor2_sq_distance(md, Rt, u, v)
        return math.sqrt(max(0.0, sq)), sq < 0
    if method == "cc":
        return cc_distance(summarize_pair(md, Rt, u, v)), False
    raise ValueError(f"unknown method {method!r}")


def approx_distance(method: Method, md: MetricData, Rt: CurvatureTensor | None, u, v) -> float:
    return pair_distance(method, md, Rt, u, v)[0]
