import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvdist.analysis import (
    classical_mds,
    curvature_histogram,
    error_stats,
    histogram,
    procrustes_distance,
)
from curvdist.linalg import jacobi_eigh, jacobi_svd
from curvdist.oracles import constant_curvature_chart, orthonormal_frame
from curvdist.pipeline import DistanceMatrix, Registration


def pairwise(X):
    return np.linalg.norm(X[:, None] - X[None, :], axis=-1)


def numpy_procrustes(A, B):
    A, B = A - A.mean(0), B - B.mean(0)
    U, _, Vt = np.linalg.svd(A.T @ B)
    return math.sqrt(np.sum((A @ U @ Vt - B) ** 2) / len(A))


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


class TestJacobi:
    @settings(max_examples=30)
    @given(n=st.integers(1, 8), seed=st.integers(0, 1000))
    def test_eigh_matches_numpy(self, n, seed):
        A = np.random.default_rng(seed).standard_normal((n, n))
        A = A + A.T
        w, V = jacobi_eigh(A)
        assert np.allclose(w, np.linalg.eigvalsh(A)[::-1], atol=1e-10)
        assert np.allclose(V.T @ V, np.eye(n), atol=1e-10)
        assert np.allclose(V @ np.diag(w) @ V.T, A, atol=1e-10)
        assert np.all(np.diff(w) <= 1e-14)

    def test_eigh_diagonal_passthrough(self):
        w, V = jacobi_eigh(np.diag([1.0, 3.0, 2.0]))
        assert np.array_equal(w, [3.0, 2.0, 1.0])

    def test_eigh_rejects_non_square(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.ones((2, 3)))

    @settings(max_examples=30)
    @given(r=st.integers(1, 6), c=st.integers(1, 6), seed=st.integers(0, 1000))
    def test_svd_matches_numpy(self, r, c, seed):
        M = np.random.default_rng(seed).standard_normal((r, c))
        U, s, Vt = jacobi_svd(M)
        assert np.allclose(s, np.linalg.svd(M, compute_uv=False), atol=1e-10)
        assert np.allclose(U @ np.diag(s) @ Vt, M, atol=1e-10)

    def test_svd_rank_deficient_completes_orthogonal(self):
        M = np.outer([1.0, 2.0, 0.0], [0.0, 1.0, 1.0])
        U, s, Vt = jacobi_svd(M)
        assert np.allclose(U.T @ U, np.eye(3), atol=1e-12)
        assert np.allclose(Vt @ Vt.T, np.eye(3), atol=1e-12)
        assert np.allclose(U @ np.diag(s) @ Vt, M, atol=1e-12)


class TestMDS:
    def test_equilateral(self):
        D = 1.0 - np.eye(3)
        emb = classical_mds(D, 2)
        assert np.allclose(emb.distances(), D, atol=1e-9)

    def test_collinear_rank_one(self):
        D = np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0)))
        emb = classical_mds(D, 2)
        assert abs(emb.all_eigenvalues[1]) <= 1e-9
        assert np.allclose(emb.distances(), D, atol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(3, 20), dim=st.integers(1, 3), seed=st.integers(0, 10_000))
    def test_recovers_euclidean_configurations(self, n, dim, seed):
        n = max(n, dim + 1)
        X = np.random.default_rng(seed).standard_normal((n, dim))
        emb = classical_mds(pairwise(X), dim)
        assert np.abs(emb.distances() - pairwise(X)).max() <= 1e-9
        assert np.abs(emb.points.mean(axis=0)).max() <= 1e-10
        assert np.all(np.diff(emb.eigenvalues) <= 0) and np.all(emb.eigenvalues >= 0)

    def test_permutation_invariance(self):
        X = np.random.default_rng(3).standard_normal((7, 2))
        D = pairwise(X)
        perm = np.random.default_rng(4).permutation(7)
        a = classical_mds(D, 2).distances()
        b = classical_mds(D[np.ix_(perm, perm)], 2).distances()
        assert np.allclose(a[np.ix_(perm, perm)], b, atol=1e-9)

    def test_non_euclidean_spherical_matrix(self, caplog):
        # six points around an octahedron on the unit sphere
        pts = np.vstack([np.eye(3), -np.eye(3)])
        D = np.arccos(np.clip(pts @ pts.T, -1, 1))
        emb = classical_mds(D, 2)
        assert emb.all_eigenvalues.min() < -1e-6
        assert emb.points.shape == (6, 2)

    def test_clamps_negative_top_eigenvalues(self, caplog):
        D = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0.0]])
        emb = classical_mds(D, 2)
        assert np.all(emb.eigenvalues >= 0)
        assert "negative" in caplog.text

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            classical_mds(np.zeros((2, 2)), 2)

    def test_accepts_distance_matrix(self):
        D = 1.0 - np.eye(3)
        emb = classical_mds(DistanceMatrix(D, "exact"), 2)
        assert np.allclose(emb.distances(), D, atol=1e-9)


class TestProcrustes:
    X = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 1.5], [-0.7, 0.4], [0.1, -1.1]])

    def test_rotation_and_translation(self):
        Y = self.X @ rotation(math.pi / 2).T + [3.0, -2.0]
        assert procrustes_distance(self.X, Y) <= 1e-10

    def test_reflection(self):
        assert procrustes_distance(self.X, self.X * [-1, 1]) <= 1e-10

    def test_single_point_displacement(self):
        n, delta = len(self.X), 1e-4
        Y = self.X.copy()
        Y[2] += [delta, 0.0]
        d = procrustes_distance(self.X, Y)
        assert d == pytest.approx(numpy_procrustes(self.X, Y), abs=1e-12)
        # translation alone absorbs the mean shift; rotation can only reduce further
        assert d <= delta * math.sqrt((n - 1) / n) / math.sqrt(n) + 1e-15
        assert d < delta / math.sqrt(n)

    @given(seed=st.integers(0, 10_000))
    def test_pseudometric(self, seed):
        rng = np.random.default_rng(seed)
        A, B, C = (rng.standard_normal((6, 2)) for _ in range(3))
        ab, ba = procrustes_distance(A, B), procrustes_distance(B, A)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab == pytest.approx(numpy_procrustes(A, B), abs=1e-10)
        assert procrustes_distance(A, C) <= ab + procrustes_distance(B, C) + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            procrustes_distance(np.zeros((3, 2)), np.zeros((4, 2)))


class TestErrorStats:
    D = pairwise(np.random.default_rng(0).standard_normal((6, 2)))

    def test_identical_is_zero(self):
        s = error_stats(self.D, self.D)
        assert (s.mean_signed, s.mean_abs, s.variance, s.variance_abs, s.max_abs) == (0, 0, 0, 0, 0)
        assert np.count_nonzero(s.histogram.counts) == 1

    def test_constant_offset(self):
        A = self.D + 0.1 * (1 - np.eye(6))
        s = error_stats(self.D, A)
        assert s.mean_signed == pytest.approx(-0.1, abs=1e-15)
        assert s.variance == pytest.approx(0, abs=1e-28)
        assert s.histogram.counts.sum() == 15

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            error_stats(np.zeros((3, 3)), np.zeros((2, 2)))

    def test_flagged_pairs_excluded(self):
        flags = np.zeros((6, 6), bool)
        flags[0, 1] = flags[1, 0] = True
        A = self.D.copy()
        A[0, 1] = A[1, 0] = A[0, 1] + 5.0
        s = error_stats(DistanceMatrix(self.D, "exact", nonconverged=flags), A)
        assert s.max_abs == 0 and s.pairs == 14 and s.excluded == 1

    def test_all_flagged(self):
        flags = ~np.eye(3, dtype=bool)
        s = error_stats(DistanceMatrix(np.zeros((3, 3)), "exact", nonconverged=flags), np.zeros((3, 3)))
        assert s.pairs == 0 and math.isnan(s.mean_abs)


class TestHistograms:
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.integers(1, 40))
    def test_counts_and_edges(self, xs, bins):
        h = histogram(xs, bins)
        assert h.counts.sum() == len(xs)
        assert h.bin_count == bins and len(h.edges) == bins + 1
        assert np.all(np.diff(h.edges) > 0)

    def test_range_excludes_outside(self):
        h = histogram([0.5, 1.5, 10.0], 2, range=(0, 2))
        assert h.counts.sum() == 2 and h.range == (0, 2)

    def _registration(self, k):
        cck = constant_curvature_chart(k)
        x = cck.base_point
        e = orthonormal_frame(cck, x)
        rng = np.random.default_rng(1)
        tangents = 0.3 * rng.standard_normal((5, 2)) @ e
        return Registration(x, tangents, np.zeros(5), np.ones(5, bool)), cck.chart

    def test_sphere_curvatures_all_one(self):
        reg, chart = self._registration(1.0)
        cs = curvature_histogram(reg, chart)
        assert np.allclose(cs.values, 1.0, atol=1e-6)
        assert np.count_nonzero(cs.histogram.counts) == 1 and cs.skipped == 0

    def test_flat_curvatures_zero_and_dependent_skipped(self):
        reg, chart = self._registration(0.0)
        reg.tangents[1] = 2 * reg.tangents[0]
        cs = curvature_histogram(reg, chart)
        assert cs.skipped == 1 and np.all(cs.values == 0)
