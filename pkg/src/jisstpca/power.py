"""Single-factor joint power iteration for pairs of network populations.

Three engines share one loop:

* :func:`fit_single` -- scalar eigenvalue per modality,
* :func:`fit_single_generalized` -- a diagonal of (signed) eigenvalues per
  modality, re-estimated every iteration and used to weight the trace
  products in the population update,
* :func:`fit_single_matrix_tensor` -- a network tensor paired with a
  ``q x N`` covariate matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .linalg import sin_theta_subspace, sin_theta_vec, top_left_singular_vector, top_r_symmetric
from .tensor import (
    SemiSymTensor,
    as_semisym,
    matricize_mode3,
    mode3_mult,
    rank_factor_tensor,
    trace_product,
    trace_product_weighted,
)

__all__ = [
    "FitError",
    "Factor",
    "FitOptions",
    "FitTrace",
    "spectral_init",
    "warm_init",
    "fit_single",
    "fit_single_generalized",
    "fit_single_matrix_tensor",
    "fit_single_variant",
]

DENOM_FLOOR = 1e-14
VARIANTS = ("scalar", "generalized", "matrix")


class FitError(RuntimeError):
    """Numerical failure of a fit (zero pooled signal, degenerate covariates)."""


@dataclass
class Factor:
    """One extracted layer.

    ``W`` is ``q x r_y`` for the tensor variants and ``q x 1`` (the unit
    feature vector ``w``) for the matrix-tensor variant.  ``scale_x`` and
    ``scale_y`` are floats for the scalar and matrix variants and length
    ``r`` arrays for the generalized one.
    """

    u: np.ndarray
    V: np.ndarray
    W: np.ndarray
    scale_x: Union[float, np.ndarray]
    scale_y: Union[float, np.ndarray]
    variant: str = "scalar"

    @property
    def r_x(self) -> int:
        return self.V.shape[1]

    @property
    def r_y(self) -> int:
        return self.W.shape[1]

    @property
    def w(self) -> np.ndarray:
        return self.W[:, 0]

    def reconstruct_x(self) -> SemiSymTensor:
        return rank_factor_tensor(self.V, self.scale_x, self.u)

    def reconstruct_y(self):
        if self.variant == "matrix":
            return float(self.scale_y) * np.outer(self.w, self.u)
        return rank_factor_tensor(self.W, self.scale_y, self.u)

    def to_dict(self) -> dict:
        def enc(s):
            return s.tolist() if isinstance(s, np.ndarray) else float(s)

        return {
            "variant": self.variant,
            "u": self.u.tolist(),
            "V": self.V.tolist(),
            "W": self.W.tolist(),
            "scale_x": enc(self.scale_x),
            "scale_y": enc(self.scale_y),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Factor":
        def dec(s):
            return np.asarray(s, dtype=np.float64) if isinstance(s, list) else float(s)

        return cls(
            u=np.asarray(d["u"], dtype=np.float64),
            V=np.asarray(d["V"], dtype=np.float64).reshape(len(d["V"]), -1),
            W=np.asarray(d["W"], dtype=np.float64).reshape(len(d["W"]), -1),
            scale_x=dec(d["scale_x"]),
            scale_y=dec(d["scale_y"]),
            variant=d.get("variant", "scalar"),
        )


@dataclass
class FitOptions:
    """Options for a single-factor fit.

    ``lam`` is the modality weight in ``[0, 1]`` or ``"auto"`` for the
    norm-ratio default.  ``init`` is ``"spectral"``, ``"warm"`` or an
    explicit starting vector.
    """

    r_x: int = 1
    r_y: int = 1
    lam: Union[float, str] = "auto"
    t_max: int = 20
    tol: float = 1e-6
    init: Union[str, np.ndarray] = "spectral"

    def __post_init__(self):
        if isinstance(self.lam, str):
            if self.lam != "auto":
                raise ValueError(f"lam must be a number in [0, 1] or 'auto', got {self.lam!r}")
        elif not 0.0 <= float(self.lam) <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.r_x < 1 or self.r_y < 1:
            raise ValueError("ranks must be at least 1")
        if isinstance(self.init, str) and self.init not in ("spectral", "warm"):
            raise ValueError(f"unknown init {self.init!r}")

    def replace(self, **changes) -> "FitOptions":
        kw = {f: getattr(self, f) for f in ("r_x", "r_y", "lam", "t_max", "tol", "init")}
        kw.update(changes)
        return FitOptions(**kw)


@dataclass
class FitTrace:
    """Per-iteration iterates.

    ``u[t]`` is ``u^(t)`` (``u[0]`` the initial vector); ``V[t - 1]`` and
    ``W[t - 1]`` are ``V^(t)``, ``W^(t)``.  ``changes[t - 1]`` is the largest
    sin-theta movement recorded at iteration ``t``.
    """

    lam: float
    u: list = field(default_factory=list)
    V: list = field(default_factory=list)
    W: list = field(default_factory=list)
    D_x: list = field(default_factory=list)
    D_y: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self) -> int:
        return len(self.V)

    def u_at(self, t: int) -> np.ndarray:
        return self.u[min(t, len(self.u) - 1)]

    def V_at(self, t: int) -> np.ndarray:
        return self.V[min(t, len(self.V)) - 1]

    def W_at(self, t: int) -> np.ndarray:
        return self.W[min(t, len(self.W)) - 1]


def resolve_lambda(lam, X, Y) -> float:
    if isinstance(lam, str):
        from .selection import default_lambda

        return default_lambda(X, Y)
    return float(lam)


def warm_init(N: int) -> np.ndarray:
    if N < 1:
        raise ValueError("N must be at least 1")
    return np.full(N, 1.0 / np.sqrt(N))


def spectral_init(X, Y, lam) -> np.ndarray:
    """Leading left singular vector of ``[lam M3(X), (1 - lam) M3(Y)]``.

    ``Y`` may be a covariate matrix (``q x N``), in which case its transpose
    takes the place of the mode-3 unfolding.
    """
    X = as_semisym(X)
    blocks = [lam * matricize_mode3(X)]
    if isinstance(Y, np.ndarray) and Y.ndim == 2:
        if Y.shape[1] != X.N:
            raise ValueError(f"covariate matrix has {Y.shape[1]} columns, expected N={X.N}")
        blocks.append((1.0 - lam) * Y.T)
    else:
        Y = as_semisym(Y)
        if Y.N != X.N:
            raise ValueError(f"sample counts differ: {X.N} vs {Y.N}")
        blocks.append((1.0 - lam) * matricize_mode3(Y))
    M = np.hstack(blocks)
    if not np.any(M):
        raise FitError("both weighted inputs are zero; spectral initialization undefined")
    return top_left_singular_vector(M)


def _initial_u(X, Y, opts: FitOptions, lam: float) -> np.ndarray:
    if isinstance(opts.init, str):
        if opts.init == "warm":
            return warm_init(X.N)
        return spectral_init(X, Y, lam)
    u = np.asarray(opts.init, dtype=np.float64)
    if u.shape != (X.N,):
        raise ValueError(f"initial vector has shape {u.shape}, expected ({X.N},)")
    n = np.linalg.norm(u)
    if n == 0:
        raise ValueError("initial vector is zero")
    return u / n


def _tensor_side(t: SemiSymTensor, r: int, weighted: bool) -> Callable:
    """Network-side update: top-r basis of ``t x_3 u`` and its trace product."""

    def step(u):
        M = mode3_mult(t, u)
        B, _ = top_r_symmetric(M, r)
        if weighted:
            # off-diagonal of B'MB is round-off only; keep the diagonal
            D = np.einsum("ia,ij,ja->a", B, M, B)
            return B, D, trace_product_weighted(t, B, D)
        return B, None, trace_product(t, B)

    return step


def _matrix_side(Y: np.ndarray) -> Callable:
    def step(u):
        y = Y @ u
        n = np.linalg.norm(y)
        if n < DENOM_FLOOR:
            raise FitError("Y u is numerically zero; covariate signal is degenerate")
        w = y / n
        return w[:, None], None, Y.T @ w

    return step


def _power_loop(u0, lam, opts, x_step, y_step, trace: FitTrace):
    u = u0
    trace.u.append(u.copy())
    for t in range(opts.t_max):
        V, Dx, cx = x_step(u)
        W, Dy, cy = y_step(u)
        pooled = lam * cx + (1.0 - lam) * cy
        n = np.linalg.norm(pooled)
        if n < DENOM_FLOOR:
            raise FitError(
                f"pooled trace product vanished at iteration {t + 1} (norm {n:.3g}); "
                "check ranks and that the data are not all zero"
            )
        u_new = pooled / n
        change = sin_theta_vec(u, u_new)
        if t > 0:
            change = max(
                change,
                sin_theta_subspace(trace.V[-1], V),
                sin_theta_subspace(trace.W[-1], W),
            )
        trace.V.append(V)
        trace.W.append(W)
        trace.D_x.append(Dx)
        trace.D_y.append(Dy)
        trace.u.append(u_new)
        trace.changes.append(change)
        u = u_new
        if t > 0 and change < opts.tol:
            trace.converged = True
            break
    return u


def _check_pair(X, Y, opts):
    X = as_semisym(X)
    if isinstance(Y, np.ndarray) and Y.ndim == 2:
        if Y.shape[1] != X.N:
            raise ValueError(f"covariate matrix has {Y.shape[1]} columns, expected N={X.N}")
    else:
        Y = as_semisym(Y)
        if Y.N != X.N:
            raise ValueError(f"sample counts differ: {X.N} vs {Y.N}")
        if opts.r_y > Y.p:
            raise ValueError(f"r_y={opts.r_y} exceeds q={Y.p}")
    if opts.r_x > X.p:
        raise ValueError(f"r_x={opts.r_x} exceeds p={X.p}")
    return X, Y


def fit_single(X, Y, opts: Optional[FitOptions] = None) -> tuple[Factor, FitTrace]:
    """Single-factor JisstPCA.

    Alternates ``V <- top r_x eigenvectors of X x_3 u``, ``W <- top r_y of
    Y x_3 u`` and ``u <- normalized lam [X; V] + (1 - lam) [Y; W]`` until
    ``t_max`` iterations or until the largest sin-theta movement of
    ``u``, ``V`` and ``W`` drops below ``tol``.

    Returns
    -------
    factor : Factor
        ``scale_x = <X, VV' o u> / r_x`` and likewise for ``Y``.
    trace : FitTrace
    """
    opts = opts or FitOptions()
    X, Y = _check_pair(X, Y, opts)
    lam = resolve_lambda(opts.lam, X, Y)
    trace = FitTrace(lam=lam)
    u0 = _initial_u(X, Y, opts, lam)
    u = _power_loop(
        u0, lam, opts, _tensor_side(X, opts.r_x, False), _tensor_side(Y, opts.r_y, False), trace
    )
    V, W = trace.V[-1], trace.W[-1]
    d_x = float(trace_product(X, V) @ u) / opts.r_x
    d_y = float(trace_product(Y, W) @ u) / opts.r_y
    return Factor(u=u, V=V, W=W, scale_x=d_x, scale_y=d_y, variant="scalar"), trace


def fit_single_generalized(X, Y, opts: Optional[FitOptions] = None) -> tuple[Factor, FitTrace]:
    """Generalized single-factor JisstPCA with per-column eigenvalues.

    Each iteration also sets ``D_x = diag(V' (X x_3 u) V)`` (``D_y`` alike),
    and the population update pools the weighted trace products
    ``[X; V, D_x]`` and ``[Y; W, D_y]``.  The returned diagonals are the ones
    from the final iteration, with the sign of ``u`` chosen so that
    ``lam sum(D_x) + (1 - lam) sum(D_y)`` is non-negative.
    """
    opts = opts or FitOptions()
    X, Y = _check_pair(X, Y, opts)
    lam = resolve_lambda(opts.lam, X, Y)
    trace = FitTrace(lam=lam)
    u0 = _initial_u(X, Y, opts, lam)
    u = _power_loop(
        u0, lam, opts, _tensor_side(X, opts.r_x, True), _tensor_side(Y, opts.r_y, True), trace
    )
    D_x, D_y = trace.D_x[-1].copy(), trace.D_y[-1].copy()
    # (u, D) and (-u, -D) fit equally well; report the one with positive pooled signal
    if lam * D_x.sum() + (1.0 - lam) * D_y.sum() < 0:
        u, D_x, D_y = -u, -D_x, -D_y
    return (
        Factor(u=u, V=trace.V[-1], W=trace.W[-1], scale_x=D_x, scale_y=D_y, variant="generalized"),
        trace,
    )


def fit_single_matrix_tensor(X, Y, opts: Optional[FitOptions] = None) -> tuple[Factor, FitTrace]:
    """Single-factor fit of a network tensor ``X`` and covariates ``Y`` (``q x N``).

    ``w <- Y u / ||Y u||`` replaces the network update on the covariate side
    and ``Y' w`` replaces its trace product.  ``scale_y = w' Y u``.
    ``opts.r_y`` is ignored.
    """
    opts = opts or FitOptions()
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("covariates must be a q x N matrix")
    X, Y = _check_pair(X, Y, opts)
    lam = resolve_lambda(opts.lam, X, Y)
    trace = FitTrace(lam=lam)
    u0 = _initial_u(X, Y, opts, lam)
    u = _power_loop(u0, lam, opts, _tensor_side(X, opts.r_x, False), _matrix_side(Y), trace)
    V, W = trace.V[-1], trace.W[-1]
    d_x = float(trace_product(X, V) @ u) / opts.r_x
    d_y = float(W[:, 0] @ Y @ u)
    return Factor(u=u, V=V, W=W, scale_x=d_x, scale_y=d_y, variant="matrix"), trace


_FITTERS = {
    "scalar": fit_single,
    "generalized": fit_single_generalized,
    "matrix": fit_single_matrix_tensor,
}


def fit_single_variant(X, Y, opts: FitOptions, variant: str = "scalar"):
    try:
        fitter = _FITTERS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}") from None
    return fitter(X, Y, opts)
