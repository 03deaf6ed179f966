"""Straight-line dense transcriptions used as independent references.

Everything here works on ``(p, p, N)`` arrays with explicit loops and full
eigen/singular decompositions, sharing no code with the package.
"""

import numpy as np


def to_ppn(t):
    return np.asarray(t.slices).transpose(1, 2, 0)


def weighted_slice_sum(x, u):
    p, _, N = x.shape
    out = np.zeros((p, p))
    for k in range(N):
        out += u[k] * x[:, :, k]
    return out


def top_abs_eigvecs(A, r):
    w, S = np.linalg.eig(A)
    w, S = w.real, S.real
    order = np.argsort(-np.abs(w))[:r]
    B, _ = np.linalg.qr(S[:, order])
    return B, w[order]


def unfold3(x):
    p, _, N = x.shape
    M = np.zeros((N, p * p))
    for k in range(N):
        for j in range(p):
            for i in range(p):
                M[k, j * p + i] = x[i, j, k]
    return M


def unfold1(z):
    a, b, c = z.shape
    M = np.zeros((a, b * c))
    for i in range(a):
        for j in range(b):
            for k in range(c):
                M[i, k * b + j] = z[i, j, k]
    return M


def left_sv(M, r):
    U, _, _ = np.linalg.svd(M, full_matrices=True)
    return U[:, :r]


def spectral_init(x, y, lam, y_is_matrix=False):
    right = (1 - lam) * (y.T if y_is_matrix else unfold3(y))
    return left_sv(np.hstack([lam * unfold3(x), right]), 1)[:, 0]


def trace_vec(x, B, d=None):
    N = x.shape[2]
    d = np.ones(B.shape[1]) if d is None else d
    out = np.zeros(N)
    for k in range(N):
        for i in range(B.shape[1]):
            out[k] += d[i] * B[:, i] @ x[:, :, k] @ B[:, i]
    return out


def alg1_step(x, y, u0, rx, ry, lam):
    V, _ = top_abs_eigvecs(weighted_slice_sum(x, u0), rx)
    W, _ = top_abs_eigvecs(weighted_slice_sum(y, u0), ry)
    g = lam * trace_vec(x, V) + (1 - lam) * trace_vec(y, W)
    return V, W, g / np.linalg.norm(g)


def alg5_step(x, y, u0, rx, ry, lam):
    Mx, My = weighted_slice_sum(x, u0), weighted_slice_sum(y, u0)
    V, _ = top_abs_eigvecs(Mx, rx)
    W, _ = top_abs_eigvecs(My, ry)
    Dx = np.diag(V.T @ Mx @ V)
    Dy = np.diag(W.T @ My @ W)
    g = lam * trace_vec(x, V, Dx) + (1 - lam) * trace_vec(y, W, Dy)
    return V, W, Dx, Dy, g / np.linalg.norm(g)


def alg4_step(x, Y, u0, rx, lam):
    V, _ = top_abs_eigvecs(weighted_slice_sum(x, u0), rx)
    w = Y @ u0
    w = w / np.linalg.norm(w)
    g = lam * trace_vec(x, V) + (1 - lam) * (Y.T @ w)
    return V, w, g / np.linalg.norm(g)


def contract(x, A, B, C):
    """``x x_1 A x_2 B x_3 C`` by explicit summation."""
    p1, p2, p3 = x.shape
    out = np.zeros((A.shape[0], B.shape[0], C.shape[0]))
    for a in range(A.shape[0]):
        for b in range(B.shape[0]):
            for c in range(C.shape[0]):
                s = 0.0
                for i in range(p1):
                    for j in range(p2):
                        for k in range(p3):
                            s += A[a, i] * B[b, j] * C[c, k] * x[i, j, k]
                out[a, b, c] = s
    return out


def ihosvd_bases(x, y, Rx, Ry, K):
    V = left_sv(unfold1(x), Rx)
    W = left_sv(unfold1(y), Ry)
    U = left_sv(np.hstack([unfold3(x), unfold3(y)]), K)
    return V, W, U


def alg7_step(x, y, Rx, Ry, K):
    V0, W0, U0 = ihosvd_bases(x, y, Rx, Ry, K)
    p, q = x.shape[0], y.shape[0]
    V1 = left_sv(unfold1(contract(x, np.eye(p), V0.T, U0.T)), Rx)
    W1 = left_sv(unfold1(contract(y, np.eye(q), W0.T, U0.T)), Ry)
    N = x.shape[2]
    cx = contract(x, V1.T, V1.T, np.eye(N))
    cy = contract(y, W1.T, W1.T, np.eye(N))
    U1 = left_sv(np.hstack([unfold3(cx), unfold3(cy)]), K)
    return V1, W1, U1


def proj(B):
    B = np.atleast_2d(B.T).T
    return B @ B.T
