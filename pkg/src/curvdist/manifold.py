"""Generic Riemannian machinery driven by a metric-with-derivatives chart.

Index conventions used throughout the package:

* ``dg[i, j, k]``     = d g_ij / d x^k        (derivative index last)
* ``d2g[i, j, k, l]`` = d^2 g_ij / d x^k d x^l
* ``gamma[k, i, j]``  = Christoffel symbol Gamma^k_ij
* ``R[i, j, k, l]``   = R(e_i, e_j, e_k, e_l), signed so that the round unit
  sphere has ``R(u, v, v, u) > 0``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np


class GeometryError(Exception):
    """Base class for all geometric failures raised by this package."""


class DomainError(GeometryError):
    """A point lies outside the open chart domain."""


class DomainEscapeError(DomainError):
    """A geodesic left the chart domain during integration."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class MetricError(GeometryError):
    """The metric is not symmetric positive-definite (or badly conditioned)."""


class CapabilityError(GeometryError):
    """The chart cannot supply information the operation requires."""


class DependenceError(GeometryError):
    """Two tangent vectors are (numerically) linearly dependent."""


class ConvergenceError(GeometryError):
    """The shooting solver did not reach its tolerance.

    Carries the best initial velocity found and its residual.
    """

    def __init__(self, message, best, residual):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray | None = None
    d2g: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def inner(self, u, v) -> float:
        return float(u @ self.g @ v)

    def norm(self, u) -> float:
        return float(np.sqrt(max(u @ self.g @ u, 0.0)))


@dataclass(frozen=True)
class GeodesicSolverConfig:
    steps: int = 100
    bvp_tol: float = 1e-9
    bvp_max_iter: int = 200
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.steps < 1 or self.bvp_max_iter < 1:
            raise ValueError("steps and bvp_max_iter must be >= 1")
        if self.bvp_tol <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances must be strictly positive")


DEFAULT_CONFIG = GeodesicSolverConfig()


@dataclass(frozen=True)
class CurvatureTensor:
    base: np.ndarray
    R: np.ndarray

    def __call__(self, a, b, c, d) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.R, a, b, c, d))

    def symmetry_residuals(self) -> dict[str, float]:
        """Largest violation of each algebraic identity, relative to max|R|."""
        R = self.R
        scale = max(float(np.abs(R).max()), np.finfo(float).tiny)
        bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
        return {
            "antisym_12": float(np.abs(R + R.transpose(1, 0, 2, 3)).max()) / scale,
            "antisym_34": float(np.abs(R + R.transpose(0, 1, 3, 2)).max()) / scale,
            "pair": float(np.abs(R - R.transpose(2, 3, 0, 1)).max()) / scale,
            "bianchi": float(np.abs(bianchi).max()) / scale,
        }


class BVPCounter:
    """Process-wide, thread-safe count of geodesic boundary value solves."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._value

    def increment(self) -> None:
        with self._lock:
            self._value += 1

    def reset(self) -> None:
        with self._lock:
            self._value = 0


bvp_counter = BVPCounter()


class ManifoldChart:
    """A single coordinate chart of a Riemannian manifold.

    Subclasses implement :meth:`metric` and :meth:`in_domain`. The Hamiltonian
    vector field has a generic implementation in terms of ``g_inv`` and
    ``dg``; charts with a cheaper closed form should override it.
    """

    dim: int

    def metric(self, q, order: int = 2) -> MetricData:
        """Metric at ``q``; ``order`` is the highest derivative requested."""
        raise NotImplementedError

    def in_domain(self, q) -> np.ndarray:
        """Boolean (array over leading axes) telling whether ``q`` is in the chart."""
        raise NotImplementedError

    def check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {q.shape}")
        if not np.all(np.isfinite(q)) or not bool(self.in_domain(q)):
            raise DomainError(f"point {q} is outside the chart domain")
        return q

    def hamiltonian_field(self, q, p):
        """Right-hand side of the cogeodesic equations for H = p^T g^{-1} p / 2.

        ``q`` and ``p`` have shape (batch, dim).
        """
        dq = np.empty_like(q)
        dp = np.empty_like(p)
        for b in range(q.shape[0]):
            md = self.metric(q[b], order=1)
            dq[b] = md.g_inv @ p[b]
            dp[b] = 0.5 * np.einsum("ijk,i,j->k", md.dg, dq[b], dq[b])
        return dq, dp

    def coordinate_scale(self, q) -> float:
        return max(1.0, float(np.abs(q).max()))


def christoffel(chart: ManifoldChart, q, md: MetricData | None = None) -> np.ndarray:
    """Christoffel symbols of the second kind, ``gamma[k, i, j]``."""
    if md is None:
        q = chart.check(q)
        md = chart.metric(q, order=1)
    return _christoffel(md)


def _christoffel_lower(dg):
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    return 0.5 * (dg.transpose(1, 2, 0) + dg.transpose(1, 0, 2) - dg.transpose(2, 0, 1))


def _christoffel(md: MetricData) -> np.ndarray:
    if md.dg is None:
        raise CapabilityError("metric derivatives are required for Christoffel symbols")
    return np.einsum("kl,lij->kij", md.g_inv, _christoffel_lower(md.dg))


def _christoffel_derivative(md: MetricData) -> np.ndarray:
    """``dgamma[k, i, j, m]`` = d Gamma^k_ij / d x^m from analytic d2g."""
    dg, d2g, ginv = md.dg, md.d2g, md.g_inv
    lower = _christoffel_lower(dg)
    dlower = 0.5 * (
        d2g.transpose(1, 2, 0, 3) + d2g.transpose(1, 0, 2, 3) - d2g.transpose(2, 0, 1, 3)
    )
    dginv = -np.einsum("ka,abm,bl->klm", ginv, dg, ginv)
    return np.einsum("klm,lij->kijm", dginv, lower) + np.einsum("kl,lijm->kijm", ginv, dlower)


def _christoffel_derivative_fd(chart: ManifoldChart, q, step: float) -> np.ndarray:
    h = step * chart.coordinate_scale(q)
    out = np.empty((chart.dim,) * 4)
    for m in range(chart.dim):
        e = np.zeros(chart.dim)
        e[m] = h
        plus = _christoffel(chart.metric(q + e, order=1))
        minus = _christoffel(chart.metric(q - e, order=1))
        out[..., m] = (plus - minus) / (2 * h)
    return out


def curvature_tensor(
    chart: ManifoldChart,
    q,
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
    fd_fallback: bool = True,
) -> CurvatureTensor:
    """Full (0,4) Riemann tensor at ``q``.

    Uses analytic second metric derivatives when the chart provides them,
    otherwise central differences of the Christoffel symbols.
    """
    q = chart.check(q)
    md = chart.metric(q, order=2)
    gamma = _christoffel(md)
    if md.d2g is not None:
        dgamma = _christoffel_derivative(md)
    elif fd_fallback:
        dgamma = _christoffel_derivative_fd(chart, q, cfg.fd_step)
    else:
        raise CapabilityError("chart provides no second derivatives and fallback is disabled")
    # R^r_{s mu nu} = d_mu G^r_{nu s} - d_nu G^r_{mu s} + G^r_{mu l} G^l_{nu s} - G^r_{nu l} G^l_{mu s}
    rup = (
        dgamma.transpose(0, 2, 3, 1)
        - dgamma.transpose(0, 2, 1, 3)
        + np.einsum("rml,lns->rsmn", gamma, gamma)
        - np.einsum("rnl,lms->rsmn", gamma, gamma)
    )
    rlow = np.einsum("ar,rsmn->asmn", md.g, rup)
    # swap the last pair so that R(u, v, v, u) is the positive sectional numerator
    return CurvatureTensor(base=q, R=rlow.transpose(0, 1, 3, 2).copy())


DEPENDENCE_EPS = 1e-10


def sectional_curvature(Rt: CurvatureTensor, md: MetricData, u, v) -> float:
    uu, vv, uv = md.inner(u, u), md.inner(v, v), md.inner(u, v)
    denom = uu * vv - uv * uv
    if not denom > DEPENDENCE_EPS * uu * vv or uu * vv == 0.0:
        raise DependenceError("tangent vectors are linearly dependent")
    return Rt(u, v, v, u) / denom


@dataclass
class Geodesic:
    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray

    def energies(self, chart: ManifoldChart) -> np.ndarray:
        """``g(qdot, qdot)`` along the trajectory (twice the Hamiltonian)."""
        dq, _ = chart.hamiltonian_field(self.positions, self.momenta)
        return np.einsum("bi,bi->b", dq, self.momenta)


def _rk4(chart: ManifoldChart, q, p, steps: int, record: bool = False):
    """Fixed-step RK4 over unit time on a batch of (q, p) states."""
    h = 1.0 / steps
    f = chart.hamiltonian_field
    traj_q = [q.copy()] if record else None
    traj_p = [p.copy()] if record else None
    for step in range(steps):
        k1q, k1p = f(q, p)
        k2q, k2p = f(q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = f(q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = f(q + h * k3q, p + h * k3p)
        q = q + (h / 6) * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p)
        ok = np.all(np.isfinite(q), axis=-1) & chart.in_domain(q)
        if not np.all(ok):
            raise DomainEscapeError(
                f"geodesic left the chart domain at t={(step + 1) * h:.4g}", (step + 1) * h
            )
        if record:
            traj_q.append(q.copy())
            traj_p.append(p.copy())
    if record:
        return np.array(traj_q), np.array(traj_p)
    return q, p


def _shoot(chart, q, g, vs, steps):
    """Endpoints of geodesics from ``q`` with initial velocities ``vs`` (batch, dim)."""
    qs = np.broadcast_to(q, vs.shape).copy()
    ps = vs @ g
    return _rk4(chart, qs, ps, steps)[0]


def exp(chart: ManifoldChart, q, v, cfg: GeodesicSolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Riemannian exponential ``exp_q(v)`` by RK4 on the Hamiltonian system."""
    q = chart.check(q)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return q.copy()
    g = chart.metric(q, order=0).g
    return _shoot(chart, q, g, v[None, :], cfg.steps)[0]


def geodesic(chart: ManifoldChart, q, v, cfg: GeodesicSolverConfig = DEFAULT_CONFIG) -> Geodesic:
    """Whole RK4 trajectory of the geodesic through ``q`` with velocity ``v``."""
    q = chart.check(q)
    p = chart.metric(q, order=0).g @ np.asarray(v, dtype=float)
    qs, ps = _rk4(chart, q[None, :], p[None, :], cfg.steps, record=True)
    return Geodesic(np.linspace(0.0, 1.0, cfg.steps + 1), qs[:, 0], ps[:, 0])


def log(
    chart: ManifoldChart,
    q,
    y,
    cfg: GeodesicSolverConfig = DEFAULT_CONFIG,
    path=None,
    max_norm: float | None = None,
) -> np.ndarray:
    """Riemannian logarithm ``log_q(y)`` by damped Gauss-Newton shooting.

    The initial velocity starts at the coordinate difference ``y - q`` and is
    refined with Levenberg-Marquardt steps; the Jacobian of the shooting map
    is taken by forward differences, all perturbed geodesics being
    integrated as one batch. If the direct solve stalls, or its geodesic is
    longer than ``max_norm`` (a known upper bound on the distance, so the
    shot cannot be minimizing), the target is approached through the
    intermediate points ``path`` (targets at ``CONTINUATION`` fractions,
    the last one being ``y``, or a callable producing them on demand).
    By default these lie on the coordinate segment from ``q`` to ``y``. Each call counts as one boundary value solve.

    Raises
    ------
    ConvergenceError
        If no shot reaches ``y`` within tolerance in ``cfg.bvp_max_iter``
        iterations, or every shot that does is longer than ``max_norm``.
    """
    bvp_counter.increment()
    q = chart.check(q)
    y = chart.check(y)
    tol = cfg.bvp_tol * (1.0 + float(np.abs(y).max()))
    if float(np.abs(y - q).max()) <= tol:
        return np.zeros_like(q)
    g = chart.metric(q, order=0).g
    budget = [cfg.bvp_max_iter]

    def length(w):
        return float(np.sqrt(w @ g @ w))

    def short_enough(w):
        return max_norm is None or length(w) <= max_norm * (1 + 1e-9) + tol

    v, res = _shooting(chart, q, g, y, y - q, tol, cfg, budget)
    if res <= tol and short_enough(v):
        return v
    best, best_res = v, res
    converged = [v] if res <= tol else []
    if path is None:
        path = [q + frac * (y - q) for frac in CONTINUATION]
    elif callable(path):
        path = path()
        if path is None:
            path = [q + frac * (y - q) for frac in CONTINUATION]
    v = np.zeros_like(q)
    prev = 0.0
    for frac, target in zip(CONTINUATION, path):
        if not bool(chart.in_domain(target)) or budget[0] <= 0:
            break
        stage_tol = tol if frac == 1.0 else max(tol, 1e-6)
        v, res = _shooting(chart, q, g, target, v * (frac / prev) if prev else target - q,
                           stage_tol, cfg, budget)
        if res > stage_tol:
            break
        prev = frac
    if prev == 1.0 and res <= tol:
        converged.append(v)
    if converged:
        v = min(converged, key=length)
        if short_enough(v):
            return v
        raise ConvergenceError(
            f"only non-minimizing shots found (length {length(v):.6g} > bound {max_norm:.6g})", v, 0.0
        )
    raise ConvergenceError(f"shooting did not converge (residual {best_res:.3g})", best, best_res)


CONTINUATION = (0.25, 0.5, 0.75, 1.0)
STALL_ITERATIONS = 15


def _endpoint(chart, q, g, v, steps):
    try:
        return _shoot(chart, q, g, v[None, :], steps)[0]
    except DomainEscapeError:
        return None


def _shooting(chart, q, g, y, v, tol, cfg, budget):
    """Levenberg-Marquardt on the endpoint residual; returns (v, max-norm residual)."""
    n = chart.dim
    end = None
    for _ in range(30):
        end = _endpoint(chart, q, g, v, cfg.steps)
        if end is not None:
            break
        v = 0.5 * v
    if end is None:
        return v, float("inf")
    r = end - y
    res = float(np.abs(r).max())
    mu = None
    ref, since = res, 0
    while res > tol and budget[0] > 0:
        budget[0] -= 1
        h = cfg.fd_step * max(1.0, float(np.abs(v).max()))
        try:
            ends = _shoot(chart, q, g, v + h * np.eye(n), cfg.steps)
        except DomainEscapeError:
            h = -h
            try:
                ends = _shoot(chart, q, g, v + h * np.eye(n), cfg.steps)
            except DomainEscapeError:
                break
        jac = ((ends - end) / h).T
        jtj, jtr = jac.T @ jac, jac.T @ r
        diag = np.maximum(np.diag(jtj), np.finfo(float).tiny)
        if mu is None:
            mu = 1e-6 * float(diag.max())
        cost = float(r @ r)
        for _ in range(20):
            delta = np.linalg.solve(jtj + mu * np.diag(diag), -jtr)
            trial = v + delta
            t_end = _endpoint(chart, q, g, trial, cfg.steps)
            if t_end is not None:
                rt = t_end - y
                if float(rt @ rt) < cost:
                    v, end, r = trial, t_end, rt
                    res = float(np.abs(r).max())
                    mu = max(mu / 5, 1e-15 * float(diag.max()))
                    break
            mu *= 4
        else:
            break
        if res < 0.5 * ref:
            ref, since = res, 0
        else:
            since += 1
            if since >= STALL_ITERATIONS:
                break
    return v, res
