"""Spectral primitives, subspace distances and clustering metrics."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score

__all__ = [
    "DegenerateSpectrumWarning",
    "apply_sign_convention",
    "top_r_symmetric",
    "top_left_singular_vectors",
    "top_left_singular_vector",
    "sin_theta_vec",
    "sin_theta_subspace",
    "kmeans",
    "adjusted_rand_index",
]

DENSE_EIG_MAX = 512
GAP_RTOL = 1e-12
UNIT_TOL = 1e-8


class DegenerateSpectrumWarning(UserWarning):
    """The requested leading eigenspace is not separated from the rest."""


def apply_sign_convention(B: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive.

    Ties go to the lowest index.  Works on a vector or on the columns of a
    matrix; returns a new array.
    """
    B = np.array(B, dtype=np.float64)
    if B.ndim == 1:
        i = int(np.argmax(np.abs(B)))
        return -B if B[i] < 0 else B
    idx = np.argmax(np.abs(B), axis=0)
    signs = np.where(B[idx, np.arange(B.shape[1])] < 0, -1.0, 1.0)
    return B * signs


def _warn_if_degenerate(absvals: np.ndarray, r: int, what: str):
    if r >= absvals.size:
        return
    top = absvals[0]
    if top == 0 or absvals[r - 1] - absvals[r] < GAP_RTOL * top:
        warnings.warn(
            f"{what}: eigen-gap after position {r} is below {GAP_RTOL:g} relative; "
            "returned basis is not unique",
            DegenerateSpectrumWarning,
            stacklevel=3,
        )


def _subspace_iteration(A: np.ndarray, r: int, tol: float = 1e-12, max_iter: int = 1000):
    p = A.shape[0]
    b = min(p, r + max(5, r))
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((p, b)))
    prev = None
    for _ in range(max_iter):
        Q, _ = np.linalg.qr(A @ Q)
        T = Q.T @ A @ Q
        w, S = np.linalg.eigh(0.5 * (T + T.T))
        order = np.argsort(-np.abs(w), kind="stable")
        w, S = w[order], S[:, order]
        Q = Q @ S
        if prev is not None and np.max(np.abs(np.abs(w[:r]) - np.abs(prev))) <= tol * max(
            abs(w[0]), 1.0
        ):
            resid = np.abs(A @ Q[:, :r] - Q[:, :r] * w[:r]).max()
            if resid <= 1e-10 * max(abs(w[0]), 1.0):
                break
        prev = w[:r]
    return w, Q


def top_r_symmetric(A, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading ``r`` eigenpairs of a symmetric matrix, ranked by ``|eigenvalue|``.

    Returns ``(V, eigenvalues)`` with ``V`` orthonormal ``p x r`` under
    :func:`apply_sign_convention` and the signed eigenvalues in descending
    order of magnitude.  This is what "leading singular vectors" means for a
    symmetric matrix.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    p = A.shape[0]
    if not 1 <= r <= p:
        raise ValueError(f"rank r={r} must lie in [1, {p}]")
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A - A.T).max(initial=0.0) > 1e-8 * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    if p <= DENSE_EIG_MAX:
        w, S = np.linalg.eigh(A)
    else:
        w, S = _subspace_iteration(A, r)
    order = np.argsort(-np.abs(w), kind="stable")
    w, S = w[order], S[:, order]
    _warn_if_degenerate(np.abs(w), r, "top_r_symmetric")
    return apply_sign_convention(S[:, :r]), w[:r].copy()


def top_left_singular_vectors(M, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading ``r`` left singular vectors and singular values of ``M``.

    Uses the Gram matrix ``M M'`` when ``M`` is wide, a thin SVD otherwise.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    n, m = M.shape
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} must lie in [1, {n}]")
    if not np.any(M):
        raise ValueError("matrix is identically zero; singular vectors undefined")
    if n <= m and n <= DENSE_EIG_MAX:
        G = M @ M.T
        w, S = np.linalg.eigh(0.5 * (G + G.T))
        order = np.argsort(-w, kind="stable")
        w, S = np.clip(w[order], 0.0, None), S[:, order]
        sv = np.sqrt(w)
    else:
        S, sv, _ = np.linalg.svd(M, full_matrices=False)
    _warn_if_degenerate(sv, r, "top_left_singular_vectors")
    return apply_sign_convention(S[:, :r]), sv[:r].copy()


def top_left_singular_vector(M) -> np.ndarray:
    return top_left_singular_vectors(M, 1)[0][:, 0]


def _check_unit(x, name):
    n = np.linalg.norm(x)
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} is not a unit vector (norm {n:.12g})")


def sin_theta_vec(u, v) -> float:
    """``sin(arccos |u'v|)`` for unit vectors.

    Evaluated as ``||v - (u'v) u||`` rather than ``sqrt(1 - (u'v)^2)`` so
    that small angles keep full relative precision.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    _check_unit(u, "u")
    _check_unit(v, "v")
    return float(min(np.linalg.norm(v - (u @ v) * u), 1.0))


def sin_theta_subspace(V, W, norm: str = "op") -> float:
    """Principal-angle distance between the column spaces of ``V`` and ``W``.

    ``norm="op"`` gives the largest sine and ``norm="frobenius"`` the root
    sum of squared sines, both read off the residual ``(I - VV') W``.
    """
    V = np.asarray(V, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if W.ndim == 1:
        W = W[:, None]
    if V.shape != W.shape:
        raise ValueError(f"shape mismatch: {V.shape} vs {W.shape}")
    R = W - V @ (V.T @ W)
    if norm == "op":
        return float(min(np.linalg.norm(R, 2), 1.0))
    if norm in ("frobenius", "fro"):
        return float(min(np.linalg.norm(R), np.sqrt(V.shape[1])))
    raise ValueError(f"unknown norm {norm!r}")


KMEANS_RESTARTS = 10


def kmeans(points, k: int, restarts: int = KMEANS_RESTARTS, seed: int = 0, max_iter: int = 100) -> np.ndarray:
    """k-means++ clustering, best of ``restarts`` by within-cluster sum of squares.

    Returns 0-based labels.  Deterministic for a given ``seed``.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"cannot form k={k} clusters from {n} points")
    if k == 1:
        return np.zeros(n, dtype=int)
    km = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=restarts,
        max_iter=max_iter,
        random_state=seed,
        algorithm="lloyd",
    )
    return km.fit_predict(X).astype(int)


def within_cluster_ss(points, labels) -> float:
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    total = 0.0
    for c in np.unique(labels):
        pts = X[labels == c]
        total += float(np.sum((pts - pts.mean(axis=0)) ** 2))
    return total


def adjusted_rand_index(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in length: {a.shape} vs {b.shape}")
    return float(adjusted_rand_score(a, b))
