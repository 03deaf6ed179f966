"""Dense semi-symmetric third-order tensors and the algebra used by every fit.

A semi-symmetric tensor is a ``p x p x N`` array whose ``N`` frontal slices
are symmetric.  Storage is slice-major (``slices[k]`` is the ``k``-th
network, row-major within the slice), so every mode-3 operation streams
contiguous memory.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SemiSymTensor",
    "as_semisym",
    "matricize_mode3",
    "unmatricize_mode3",
    "mode3_mult",
    "mode3_project",
    "trace_product",
    "trace_product_weighted",
    "rank_factor_tensor",
    "frobenius_norm",
    "inner_product",
    "project_modes12",
    "project_out_ones",
    "check_orthonormal",
]

SYM_RTOL = 1e-8
ORTHO_TOL = 1e-8


class SemiSymTensor:
    """Immutable ``p x p x N`` tensor with symmetric frontal slices.

    Parameters
    ----------
    slices : array_like, shape (N, p, p)
        Slice-major data.  Slices whose asymmetry is within ``1e-8`` of the
        largest entry are symmetrized as ``(A + A') / 2``; larger asymmetry
        raises ``ValueError``.

    Use :meth:`from_array` to build from the conventional ``(p, p, N)``
    layout.
    """

    __slots__ = ("slices",)

    def __init__(self, slices):
        a = np.array(slices, dtype=np.float64, order="C")
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError(f"expected slices of shape (N, p, p), got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor contains non-finite entries")
        asym = np.abs(a - a.transpose(0, 2, 1)).max(initial=0.0)
        scale = np.abs(a).max(initial=0.0)
        if asym > SYM_RTOL * max(scale, np.finfo(float).tiny):
            raise ValueError(
                f"slices are not symmetric (max asymmetry {asym:.3g}, scale {scale:.3g})"
            )
        if asym > 0:
            a = 0.5 * (a + a.transpose(0, 2, 1))
        a.flags.writeable = False
        object.__setattr__(self, "slices", a)

    def __setattr__(self, name, value):
        raise AttributeError("SemiSymTensor is immutable")

    @classmethod
    def from_array(cls, array) -> "SemiSymTensor":
        """Build from a ``(p, p, N)`` array (slice index last)."""
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 3:
            raise ValueError(f"expected a 3-d array, got shape {a.shape}")
        return cls(np.moveaxis(a, 2, 0))

    @classmethod
    def zeros(cls, p: int, N: int) -> "SemiSymTensor":
        return cls(np.zeros((N, p, p)))

    @property
    def p(self) -> int:
        return self.slices.shape[1]

    @property
    def N(self) -> int:
        return self.slices.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.p, self.p, self.N)

    shape = dims

    @property
    def data(self) -> np.ndarray:
        """Flat slice-major view of the entries."""
        return self.slices.reshape(-1)

    def to_array(self) -> np.ndarray:
        """Return a ``(p, p, N)`` view."""
        return np.moveaxis(self.slices, 0, 2)

    def __repr__(self):
        return f"SemiSymTensor(p={self.p}, N={self.N})"

    def __eq__(self, other):
        if not isinstance(other, SemiSymTensor):
            return NotImplemented
        return self.slices.shape == other.slices.shape and np.array_equal(
            self.slices, other.slices
        )

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, SemiSymTensor):
            _check_same_dims(self, other)
            return SemiSymTensor(self.slices + other.slices)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SemiSymTensor):
            _check_same_dims(self, other)
            return SemiSymTensor(self.slices - other.slices)
        return NotImplemented

    def __mul__(self, c):
        if np.isscalar(c):
            return SemiSymTensor(float(c) * self.slices)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return SemiSymTensor(-self.slices)


def as_semisym(t) -> SemiSymTensor:
    """Coerce ``t`` to :class:`SemiSymTensor`; raw arrays are read as ``(p, p, N)``."""
    if isinstance(t, SemiSymTensor):
        return t
    return SemiSymTensor.from_array(t)


def _check_same_dims(a: SemiSymTensor, b: SemiSymTensor):
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")


def check_orthonormal(V, tol: float = ORTHO_TOL) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    err = np.abs(V.T @ V - np.eye(V.shape[1])).max(initial=0.0)
    if err > tol:
        raise ValueError(f"columns are not orthonormal (max |V'V - I| = {err:.3g})")
    return V


def matricize_mode3(t: SemiSymTensor) -> np.ndarray:
    """Mode-3 unfolding, ``N x p^2``, with ``M[k, (j-1)p + i] = X[i, j, k]``."""
    t = as_semisym(t)
    # column index j*p + i walks i fastest, i.e. slice k read column-major
    return t.slices.transpose(0, 2, 1).reshape(t.N, t.p * t.p)


def unmatricize_mode3(M, p: int) -> SemiSymTensor:
    M = np.asarray(M, dtype=np.float64)
    N = M.shape[0]
    if M.shape[1] != p * p:
        raise ValueError(f"expected {p * p} columns, got {M.shape[1]}")
    return SemiSymTensor(M.reshape(N, p, p).transpose(0, 2, 1))


def mode3_mult(t: SemiSymTensor, u) -> np.ndarray:
    """``X x_3 u``: the weighted slice sum ``sum_k u_k X[:, :, k]``."""
    t = as_semisym(t)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (t.N,):
        raise ValueError(f"vector length {u.shape} does not match N={t.N}")
    M = np.tensordot(u, t.slices, axes=1)
    return 0.5 * (M + M.T)


def mode3_project(t: SemiSymTensor, u) -> SemiSymTensor:
    """``X x_3 (I - u u')`` for a unit vector ``u``."""
    t = as_semisym(t)
    u = np.asarray(u, dtype=np.float64)
    return SemiSymTensor(t.slices - u[:, None, None] * mode3_mult(t, u)[None])


def trace_product(t: SemiSymTensor, V) -> np.ndarray:
    """``[X; V]``: entry ``k`` is ``Tr(V' X_k V)``.  ``V`` must be orthonormal."""
    t = as_semisym(t)
    V = check_orthonormal(V)
    if V.shape[0] != t.p:
        raise ValueError(f"basis has {V.shape[0]} rows, tensor has p={t.p}")
    return np.einsum("kij,ij->k", t.slices, V @ V.T)


def trace_product_weighted(t: SemiSymTensor, V, D) -> np.ndarray:
    """``[X; V, D]``: entry ``k`` is ``<X_k, V D V'>`` for diagonal ``D``.

    ``D`` may be given as a diagonal matrix or as the vector of its
    diagonal entries.
    """
    t = as_semisym(t)
    V = check_orthonormal(V)
    d = _diag_vector(D, V.shape[1])
    if V.shape[0] != t.p:
        raise ValueError(f"basis has {V.shape[0]} rows, tensor has p={t.p}")
    return np.einsum("kij,ij->k", t.slices, (V * d) @ V.T)


def _diag_vector(D, r: int) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 2:
        if D.shape != (r, r):
            raise ValueError(f"diagonal weight has shape {D.shape}, expected ({r}, {r})")
        return np.diag(D).copy()
    if D.ndim == 0:
        return np.full(r, float(D))
    if D.shape != (r,):
        raise ValueError(f"diagonal weight has length {D.shape[0]}, expected {r}")
    return D


def rank_factor_tensor(V, scale, u) -> SemiSymTensor:
    """The layer ``V diag(scale) V' o u`` (``scale`` scalar or per-column)."""
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    u = np.asarray(u, dtype=np.float64)
    d = _diag_vector(scale, V.shape[1])
    M = (V * d) @ V.T
    M = 0.5 * (M + M.T)
    return SemiSymTensor(u[:, None, None] * M[None])


def frobenius_norm(t) -> float:
    a = t.slices if isinstance(t, SemiSymTensor) else np.asarray(t, dtype=np.float64)
    return float(np.sqrt(np.sum(a * a)))


def inner_product(t1, t2) -> float:
    a = t1.slices if isinstance(t1, SemiSymTensor) else np.asarray(t1, dtype=np.float64)
    b = t2.slices if isinstance(t2, SemiSymTensor) else np.asarray(t2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def project_modes12(t: SemiSymTensor, V) -> SemiSymTensor:
    """``X x_1 (I - VV') x_2 (I - VV')`` applied slice by slice."""
    t = as_semisym(t)
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    P = np.eye(t.p) - V @ V.T
    out = P @ t.slices @ P
    return SemiSymTensor(0.5 * (out + out.transpose(0, 2, 1)))


def project_out_ones(t: SemiSymTensor) -> SemiSymTensor:
    """Replace every slice ``A`` by ``J A J`` with ``J = I - 11'/p``."""
    t = as_semisym(t)
    return project_modes12(t, np.full(t.p, 1.0 / np.sqrt(t.p)))
