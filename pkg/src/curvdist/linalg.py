"""Small dense Jacobi solvers for symmetric eigenproblems and the SVD."""

from __future__ import annotations

import numpy as np

MAX_SWEEPS = 100


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
    c = 1.0 / np.hypot(t, 1.0)
    return c, t * c


def jacobi_eigh(A, tol: float = 1e-12):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||A||_F``. Returns eigenvalues in descending order and the
    matching eigenvectors as columns.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    bound = tol * max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(MAX_SWEEPS):
        off = np.linalg.norm(A[~np.eye(n, dtype=bool)])
        if off <= bound:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(A[p, p], A[q, q], apq)
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * ap - s * aq, s * ap + c * aq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise RuntimeError("Jacobi eigenvalue iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def jacobi_svd(M, tol: float = 1e-14):
    """Thin SVD ``M = U diag(s) V^T`` by one-sided (Hestenes) Jacobi.

    ``U`` is completed to an orthonormal basis when ``M`` is rank deficient.
    Singular values are returned in descending order.
    """
    U = np.array(M, dtype=float)
    rows, n = U.shape
    if rows < n:
        Vt, s, Ut = jacobi_svd(U.T, tol)
        return Ut.T, s, Vt.T
    V = np.eye(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = U[:, i] @ U[:, i]
                beta = U[:, j] @ U[:, j]
                gamma = U[:, i] @ U[:, j]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                c, s = _rotation(alpha, beta, gamma)
                ui, uj = U[:, i].copy(), U[:, j].copy()
                U[:, i], U[:, j] = c * ui - s * uj, s * ui + c * uj
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i], V[:, j] = c * vi - s * vj, s * vi + c * vj
        if not rotated:
            break
    else:
        raise RuntimeError("one-sided Jacobi SVD did not converge")
    s = np.linalg.norm(U, axis=0)
    order = np.argsort(-s, kind="stable")
    s, U, V = s[order], U[:, order], V[:, order]
    big = s > s[0] * 1e-13 if s[0] > 0 else np.zeros(n, dtype=bool)
    U[:, big] /= s[big]
    if not big.all():
        U = _complete(U[:, big], n)
    return U, s, V.T


def _complete(Q, n):
    """Extend orthonormal columns ``Q`` to ``n`` orthonormal columns."""
    rows, r = Q.shape
    basis = np.hstack([Q, np.eye(rows)])
    full, _ = np.linalg.qr(basis)
    out = full[:, :n].copy()
    # qr may flip signs of the already-orthonormal columns
    out[:, :r] = Q
    return out
