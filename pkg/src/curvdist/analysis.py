"""Consumers of distance matrices: MDS, Procrustes comparison and error statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import manifold as rm
from .linalg import jacobi_eigh, jacobi_svd
from .manifold import ManifoldChart
from .pipeline import DistanceMatrix, Registration

logger = logging.getLogger(__name__)

DEFAULT_BINS = 30


@dataclass(frozen=True)
class Embedding:
    points: np.ndarray
    eigenvalues: np.ndarray
    all_eigenvalues: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


@dataclass(frozen=True)
class HistogramSpec:
    counts: np.ndarray
    edges: np.ndarray

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def range(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])


def histogram(values, bins: int = DEFAULT_BINS, range=None) -> HistogramSpec:
    values = np.asarray(values, dtype=float)
    if range is None and values.size:
        lo, hi = float(values.min()), float(values.max())
        # rounding-level spread: a unit-width range with the data in the middle of one bin
        if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
            start = 0.5 * (lo + hi) - (bins // 2 + 0.5) / bins
            range = (start, start + 1.0)
    counts, edges = np.histogram(values, bins=bins, range=range)
    return HistogramSpec(counts, edges)


def _as_array(dm):
    return dm.values if isinstance(dm, DistanceMatrix) else np.asarray(dm, dtype=float)


def classical_mds(dm, dim: int = 2) -> Embedding:
    """Torgerson scaling: double centering followed by a Jacobi eigen-solve.

    Directions whose eigenvalue is negative are returned as zero columns.
    """
    D = _as_array(dm)
    n = D.shape[0]
    if n < dim + 1:
        raise ValueError(f"need at least {dim + 1} points for a {dim}-dimensional embedding")
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D**2) @ J
    w, V = jacobi_eigh(B)
    top = w[:dim].copy()
    if np.any(top < 0):
        logger.warning("classical MDS: %d of the top %d eigenvalues are negative", int(np.sum(top < 0)), dim)
        top = np.maximum(top, 0.0)
    X = V[:, :dim] * np.sqrt(top)
    X -= X.mean(axis=0)
    return Embedding(points=X, eigenvalues=top, all_eigenvalues=w)


def procrustes_distance(a, b) -> float:
    """RMS point discrepancy after optimal translation and orthogonal map (no scaling)."""
    A = a.points if isinstance(a, Embedding) else np.asarray(a, dtype=float)
    B = b.points if isinstance(b, Embedding) else np.asarray(b, dtype=float)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    A = A - A.mean(axis=0)
    B = B - B.mean(axis=0)
    U, _, Vt = jacobi_svd(A.T @ B)
    R = U @ Vt
    return float(np.sqrt(np.sum((A @ R - B) ** 2) / A.shape[0]))


@dataclass(frozen=True)
class ErrorStats:
    """Statistics of ``exact - approx`` over the strict upper triangle.

    Pairs flagged non-converged in either matrix carry no ground truth
    (their entries are fallbacks) and are left out; ``excluded`` counts them.
    """

    mean_signed: float
    mean_abs: float
    variance: float
    variance_abs: float
    max_abs: float
    histogram: HistogramSpec
    pairs: int = 0
    excluded: int = 0


def _flags(dm, n):
    if isinstance(dm, DistanceMatrix) and dm.nonconverged is not None:
        return np.asarray(dm.nonconverged, dtype=bool)
    return np.zeros((n, n), dtype=bool)


def error_stats(exact, approx, bins: int = DEFAULT_BINS) -> ErrorStats:
    E, A = _as_array(exact), _as_array(approx)
    if E.shape != A.shape:
        raise ValueError(f"shape mismatch {E.shape} vs {A.shape}")
    n = E.shape[0]
    iu = np.triu_indices(n, 1)
    keep = ~(_flags(exact, n) | _flags(approx, n))[iu]
    err = (E - A)[iu][keep]
    if err.size == 0:
        nan = float("nan")
        return ErrorStats(nan, nan, nan, nan, nan, histogram(err, bins, range=(0.0, 1.0)), 0, int((~keep).sum()))
    return ErrorStats(
        mean_signed=float(err.mean()),
        mean_abs=float(np.abs(err).mean()),
        variance=float(err.var()),
        variance_abs=float(np.abs(err).var()),
        max_abs=float(np.abs(err).max()),
        histogram=histogram(err, bins),
        pairs=int(err.size),
        excluded=int((~keep).sum()),
    )


@dataclass(frozen=True)
class CurvatureSample:
    values: np.ndarray
    skipped: int
    histogram: HistogramSpec

    @property
    def mean(self) -> float:
        return float(self.values.mean()) if self.values.size else float("nan")


def curvature_histogram(
    reg: Registration, chart: ManifoldChart, bins: int = DEFAULT_BINS
) -> CurvatureSample:
    """Sectional curvatures at the template for every pair of registered tangents."""
    md = chart.metric(reg.template)
    Rt = rm.curvature_tensor(chart, reg.template)
    values, skipped = [], 0
    for i in range(reg.n):
        for j in range(i + 1, reg.n):
            try:
                values.append(rm.sectional_curvature(Rt, md, reg.tangents[i], reg.tangents[j]))
            except rm.DependenceError:
                skipped += 1
    values = np.array(values)
    return CurvatureSample(values, skipped, histogram(values, bins))
