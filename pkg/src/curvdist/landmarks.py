"""Landmark spaces with Gaussian kernel co-metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import DomainError, ManifoldChart, MetricData, MetricError

SEP_EPS = 1e-8
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class LandmarkConfig:
    """``m`` distinct points in R^d, flattened landmark-major."""

    d: int
    m: int
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        object.__setattr__(self, "coords", coords)
        if coords.size != self.d * self.m:
            raise ValueError(f"expected {self.d * self.m} coordinates, got {coords.size}")
        if not np.all(np.isfinite(coords)):
            raise DomainError("landmark coordinates must be finite")
        if min_separation(coords, self.d) <= SEP_EPS:
            raise DomainError("landmarks must be pairwise distinct")

    @classmethod
    def from_points(cls, points) -> LandmarkConfig:
        points = np.asarray(points, dtype=float)
        return cls(d=points.shape[1], m=points.shape[0], coords=points.reshape(-1))

    @property
    def points(self) -> np.ndarray:
        return self.coords.reshape(self.m, self.d)


def min_separation(coords, d: int) -> np.ndarray:
    """Smallest pairwise landmark distance (vectorised over leading axes)."""
    coords = np.asarray(coords, dtype=float)
    pts = coords.reshape(coords.shape[:-1] + (-1, d))
    m = pts.shape[-2]
    if m < 2:
        return np.full(coords.shape[:-1], np.inf)
    diff = pts[..., :, None, :] - pts[..., None, :, :]
    dist2 = (diff * diff).sum(axis=-1)
    dist2[..., np.arange(m), np.arange(m)] = np.inf
    return np.sqrt(dist2.min(axis=(-2, -1)))


@dataclass(frozen=True)
class GaussianKernel:
    """k(x, y) = exp(-|x - y|^2 / (2 sigma^2)) I."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("kernel width must be positive")

    def scalar(self, pts) -> np.ndarray:
        diff = pts[..., :, None, :] - pts[..., None, :, :]
        return np.exp(-np.einsum("...d,...d->...", diff, diff) / (2 * self.sigma**2))


def _points(q, d):
    q = np.asarray(q, dtype=float)
    return q.reshape(-1, d)


def cometric_matrix(kernel: GaussianKernel, q, d: int | None = None) -> np.ndarray:
    """Block co-metric matrix K_q; block (i, j) is k(q^i, q^j).

    ``q`` is a :class:`LandmarkConfig` or a flat coordinate vector together
    with the spatial dimension ``d``.
    """
    if isinstance(q, LandmarkConfig):
        d, q = q.d, q.coords
    kmat = kernel.scalar(_points(q, d))
    _check_condition(kmat)
    return np.kron(kmat, np.eye(d))


def _check_condition(kmat):
    ev = np.linalg.eigvalsh(kmat)
    if ev[0] <= 0 or ev[-1] / ev[0] > MAX_CONDITION:
        raise MetricError("co-metric is ill-conditioned; landmarks nearly coincide")


def cometric_derivatives(kernel: GaussianKernel, q, d: int):
    """Co-metric with its first and second coordinate derivatives.

    Returns ``K``, ``dK`` with ``dK[A, B, C] = dK_AB / dq_C`` and ``d2K`` with
    ``d2K[A, B, C, E] = d^2 K_AB / dq_C dq_E``.
    """
    pts = _points(q, d)
    m = pts.shape[0]
    s2 = kernel.sigma**2
    r = pts[:, None, :] - pts[None, :, :]  # r[a, b] = q^a - q^b
    k = kernel.scalar(pts)
    eye_m = np.eye(m)
    s = eye_m[:, None, :] - eye_m[None, :, :]  # s[a, b, c] = delta_ac - delta_bc
    eye_d = np.eye(d)
    # dk[a, b, c, g] = -k_ab r_ab,g s_abc / sigma^2
    dk = -(k[:, :, None, None] * s[:, :, :, None] * r[:, :, None, :]) / s2
    # d2k[a, b, c, g, e, f] = k_ab (r_g r_f / sigma^4 - delta_gf / sigma^2) s_abc s_abe
    hess = r[:, :, :, None] * r[:, :, None, :] / s2**2 - eye_d / s2
    d2k = np.einsum("ab,abc,abe,abgf->abcgef", k, s, s, hess)
    dim = m * d
    K = np.kron(k, eye_d)
    dK = np.einsum("abcg,xy->axbycg", dk, eye_d).reshape(dim, dim, dim)
    d2K = np.einsum("abcgef,xy->axbycgef", d2k, eye_d).reshape(dim, dim, dim, dim)
    _check_condition(k)
    return K, dK, d2K


class LandmarkChart(ManifoldChart):
    """Global chart of Land^m(R^d) with metric G_q = K_q^{-1}."""

    def __init__(self, kernel: GaussianKernel, d: int, m: int):
        self.kernel = kernel
        self.d = d
        self.m = m
        self.dim = d * m

    def in_domain(self, q):
        return min_separation(q, self.d) > SEP_EPS

    def metric(self, q, order: int = 2) -> MetricData:
        q = np.asarray(q, dtype=float)
        if order == 0:
            K = cometric_matrix(self.kernel, q, self.d)
            G = _spd_inverse(K)
            return MetricData(g=G, g_inv=K)
        K, dK, d2K = cometric_derivatives(self.kernel, q, self.d)
        G = _spd_inverse(K)
        GdK = np.einsum("ia,abk->ibk", G, dK)
        dG = -np.einsum("ibk,bj->ijk", GdK, G)
        if order < 2:
            return MetricData(g=G, g_inv=K, dg=dG)
        # d_k d_l G = G dK_k G dK_l G + G dK_l G dK_k G - G d2K_kl G
        A = np.einsum("iak,abl->ibkl", GdK, GdK)
        cross = np.einsum("ibkl,bj->ijkl", A, G)
        d2G = cross + cross.transpose(0, 1, 3, 2) - np.einsum("ia,abkl,bj->ijkl", G, d2K, G)
        return MetricData(g=G, g_inv=K, dg=dG, d2g=d2G)

    def hamiltonian_field(self, q, p):
        B = q.shape[0]
        pts = q.reshape(B, self.m, self.d)
        mom = p.reshape(B, self.m, self.d)
        diff = pts[:, :, None, :] - pts[:, None, :, :]
        s2 = self.kernel.sigma**2
        k = np.exp((diff * diff).sum(axis=-1) / (-2 * s2))
        dq = k @ mom
        w = (mom @ mom.transpose(0, 2, 1)) * k
        # sum_j w_ij (x_i - x_j) without forming the weighted differences
        dp = (w.sum(axis=-1)[..., None] * pts - w @ pts) / s2
        return dq.reshape(B, -1), dp.reshape(B, -1)


def _spd_inverse(K):
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise MetricError("co-metric is not positive-definite") from exc
    Linv = np.linalg.solve(L, np.eye(K.shape[0]))
    G = Linv.T @ Linv
    return 0.5 * (G + G.T)


def landmark_chart(kernel: GaussianKernel, d: int, m: int) -> LandmarkChart:
    return LandmarkChart(kernel, d, m)
