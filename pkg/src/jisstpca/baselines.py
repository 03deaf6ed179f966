"""Integrated Tucker baselines: iHOSVD and iHOOI.

Both modalities share the sample-mode basis ``U``; each has its own
network basis (``V`` for ``X``, ``W`` for ``Y``) covering all layers at
once.  Per-layer factors are read off by slicing columns according to the
rank partition.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import sin_theta_subspace, top_left_singular_vectors, top_r_symmetric
from .tensor import SemiSymTensor, as_semisym, matricize_mode3

__all__ = ["TuckerFit", "ihosvd", "ihooi"]


@dataclass
class TuckerFit:
    V: np.ndarray
    W: np.ndarray
    U: np.ndarray
    S_x: np.ndarray
    S_y: np.ndarray
    ranks_x: list
    ranks_y: list
    X_hat: SemiSymTensor
    Y_hat: SemiSymTensor
    n_iter: int = 0

    def layers(self):
        """``[(u_i, V_i, W_i)]`` from consecutive column blocks."""
        cx = np.cumsum([0] + list(self.ranks_x))
        cy = np.cumsum([0] + list(self.ranks_y))
        return [
            (self.U[:, i], self.V[:, cx[i] : cx[i + 1]], self.W[:, cy[i] : cy[i + 1]])
            for i in range(len(self.ranks_x))
        ]


def _network_basis(slices: np.ndarray, R: int) -> np.ndarray:
    # leading left singular vectors of M1 via its Gram sum_k A_k A_k'
    G = np.einsum("kij,klj->il", slices, slices)
    B, _ = top_r_symmetric(0.5 * (G + G.T), R)
    return B


def _core(slices, B, U):
    return np.einsum("kab,kc->abc", B.T @ slices @ B, U)


def _reconstruct(S, B, U):
    inner = np.einsum("abc,kc->kab", S, U)
    out = B @ inner @ B.T
    return SemiSymTensor(0.5 * (out + out.transpose(0, 2, 1)))


def _check(X, Y, ranks_x, ranks_y):
    X, Y = as_semisym(X), as_semisym(Y)
    if X.N != Y.N:
        raise ValueError(f"sample counts differ: {X.N} vs {Y.N}")
    if len(ranks_x) != len(ranks_y):
        raise ValueError("rank vectors must have equal length")
    K = len(ranks_x)
    if sum(ranks_x) > X.p or sum(ranks_y) > Y.p or K > X.N:
        raise ValueError(
            f"rank sums ({sum(ranks_x)}, {sum(ranks_y)}, K={K}) exceed dims ({X.p}, {Y.p}, {X.N})"
        )
    return X, Y, K


def _finish(X, Y, V, W, U, ranks_x, ranks_y, n_iter):
    S_x = _core(X.slices, V, U)
    S_y = _core(Y.slices, W, U)
    return TuckerFit(
        V=V,
        W=W,
        U=U,
        S_x=S_x,
        S_y=S_y,
        ranks_x=list(ranks_x),
        ranks_y=list(ranks_y),
        X_hat=_reconstruct(S_x, V, U),
        Y_hat=_reconstruct(S_y, W, U),
        n_iter=n_iter,
    )


def _ihosvd_bases(X, Y, ranks_x, ranks_y, K):
    V = _network_basis(X.slices, sum(ranks_x))
    W = _network_basis(Y.slices, sum(ranks_y))
    U, _ = top_left_singular_vectors(np.hstack([matricize_mode3(X), matricize_mode3(Y)]), K)
    return V, W, U


def ihosvd(X, Y, ranks_x, ranks_y) -> TuckerFit:
    """Integrated HOSVD.

    ``V`` and ``W`` are the leading ``sum(ranks)`` left singular vectors of
    the mode-1 unfoldings; ``U`` holds the leading ``K`` left singular
    vectors of ``[M3(X), M3(Y)]``.
    """
    X, Y, K = _check(X, Y, ranks_x, ranks_y)
    V, W, U = _ihosvd_bases(X, Y, ranks_x, ranks_y, K)
    return _finish(X, Y, V, W, U, ranks_x, ranks_y, 0)


def ihooi(X, Y, ranks_x, ranks_y, k_max: int = 20, tol: float = 1e-6) -> TuckerFit:
    """Integrated higher-order orthogonal iteration, started from :func:`ihosvd`.

    Each sweep updates ``V`` from ``M1(X x_2 V' x_3 U')``, ``W`` likewise,
    then ``U`` from ``[M3(X x_1 V' x_2 V'), M3(Y x_1 W' x_2 W')]`` with no
    rescaling between the two blocks.  Stops after ``k_max`` sweeps or once
    no basis moves by more than ``tol`` in sin-theta.
    """
    X, Y, K = _check(X, Y, ranks_x, ranks_y)
    Rx, Ry = sum(ranks_x), sum(ranks_y)
    V, W, U = _ihosvd_bases(X, Y, ranks_x, ranks_y, K)
    it = 0
    for it in range(1, k_max + 1):
        Zx = np.einsum("kij,jb,kc->ibc", X.slices, V, U).reshape(X.p, -1)
        Zy = np.einsum("kij,jb,kc->ibc", Y.slices, W, U).reshape(Y.p, -1)
        V_new, _ = top_left_singular_vectors(Zx, Rx)
        W_new, _ = top_left_singular_vectors(Zy, Ry)
        Cx = (V_new.T @ X.slices @ V_new).reshape(X.N, -1)
        Cy = (W_new.T @ Y.slices @ W_new).reshape(Y.N, -1)
        U_new, _ = top_left_singular_vectors(np.hstack([Cx, Cy]), K)
        change = max(
            sin_theta_subspace(V, V_new),
            sin_theta_subspace(W, W_new),
            sin_theta_subspace(U, U_new),
        )
        V, W, U = V_new, W_new, U_new
        if change < tol:
            break
    return _finish(X, Y, V, W, U, ranks_x, ranks_y, it)
