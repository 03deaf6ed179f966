"""Sequential K-factor extraction by deflation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .power import Factor, FitError, FitOptions, fit_single_variant
from .selection import BicGrid, default_lambda, select_rank_single
from .tensor import (
    SemiSymTensor,
    as_semisym,
    frobenius_norm,
    mode3_project,
    project_modes12,
)

__all__ = [
    "DEFLATIONS",
    "FactorStack",
    "deflate_subtract",
    "deflate_partial_u",
    "deflate_project_full",
    "deflate_partial_vw",
    "deflate",
    "fit_multifactor",
    "variance_explained",
]

DEFLATIONS = ("subtract", "partial-u", "project", "partial-vw")


@dataclass
class FactorStack:
    """Factors in extraction order, with per-step bookkeeping.

    ``residual_norms[k]`` holds ``(||X^k||_F, ||Y^k||_F)`` before step ``k``
    and ``lambdas[k]`` the weight used at that step.
    """

    factors: list = field(default_factory=list)
    deflations: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    bic_grids: list = field(default_factory=list)

    def __len__(self):
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, k) -> Factor:
        return self.factors[k]

    @property
    def ranks_x(self) -> list[int]:
        return [f.r_x for f in self.factors]

    @property
    def ranks_y(self) -> list[int]:
        return [f.r_y for f in self.factors]

    def layers(self):
        return [(f.u, f.V, f.W) for f in self.factors]

    def to_dict(self) -> dict:
        return {
            "factors": [f.to_dict() for f in self.factors],
            "deflations": list(self.deflations),
            "residual_norms": [list(map(float, r)) for r in self.residual_norms],
            "lambdas": [float(x) for x in self.lambdas],
            "bic_grids": [g.to_dict() if g is not None else None for g in self.bic_grids],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FactorStack":
        return cls(
            factors=[Factor.from_dict(f) for f in d["factors"]],
            deflations=list(d.get("deflations", [])),
            residual_norms=[tuple(r) for r in d.get("residual_norms", [])],
            lambdas=list(d.get("lambdas", [])),
            bic_grids=[None] * len(d["factors"]),
        )


def _is_matrix(Y) -> bool:
    return isinstance(Y, np.ndarray) and Y.ndim == 2


def _subtract(X, Y, f: Factor):
    Xn = SemiSymTensor(X.slices - f.reconstruct_x().slices)
    if _is_matrix(Y):
        Yn = Y - f.reconstruct_y()
    else:
        Yn = SemiSymTensor(Y.slices - f.reconstruct_y().slices)
    return Xn, Yn


def _proj_u(X, Y, u):
    Xn = mode3_project(X, u)
    if _is_matrix(Y):
        Yn = Y - np.outer(Y @ u, u)
    else:
        Yn = mode3_project(Y, u)
    return Xn, Yn


def _proj_vw(X, Y, f: Factor):
    Xn = project_modes12(X, f.V)
    if _is_matrix(Y):
        w = f.w
        Yn = Y - np.outer(w, w @ Y)
    else:
        Yn = project_modes12(Y, f.W)
    return Xn, Yn


def _prep(X, Y):
    X = as_semisym(X)
    Y = np.asarray(Y, dtype=np.float64) if _is_matrix(Y) else as_semisym(Y)
    return X, Y


def deflate_subtract(X, Y, f: Factor):
    """Remove the fitted layer: ``X - V diag(d) V' o u`` (and likewise ``Y``)."""
    return _subtract(*_prep(X, Y), f)


def deflate_partial_u(X, Y, f: Factor):
    """Subtract, then project the sample mode onto the complement of ``u``."""
    return _proj_u(*deflate_subtract(X, Y, f), f.u)


def deflate_project_full(X, Y, f: Factor):
    """Project modes 1-2 off ``V`` (``W``) and mode 3 off ``u``; no subtraction."""
    X, Y = _prep(X, Y)
    return _proj_u(*_proj_vw(X, Y, f), f.u)


def deflate_partial_vw(X, Y, f: Factor):
    """Subtract, then project modes 1-2 onto the complements of ``V`` and ``W``."""
    return _proj_vw(*deflate_subtract(X, Y, f), f)


_DEFLATORS = {
    "subtract": deflate_subtract,
    "partial-u": deflate_partial_u,
    "project": deflate_project_full,
    "partial-vw": deflate_partial_vw,
}


def deflate(X, Y, f: Factor, scheme: str = "subtract"):
    try:
        return _DEFLATORS[scheme](X, Y, f)
    except KeyError:
        raise ValueError(f"unknown deflation {scheme!r}; choose from {DEFLATIONS}") from None


def fit_multifactor(
    X,
    Y,
    K: int,
    ranks_x: Optional[Sequence[int]] = None,
    ranks_y: Optional[Sequence[int]] = None,
    *,
    bic: Union[None, tuple[int, int]] = None,
    deflation: str = "subtract",
    variant: str = "scalar",
    opts: Optional[FitOptions] = None,
) -> FactorStack:
    """Extract ``K`` factors by alternating single-factor fits and deflation.

    Either prescribe ``ranks_x``/``ranks_y`` (length ``K``) or pass
    ``bic=(r_x_max, r_y_max)`` to choose each factor's ranks by BIC on the
    current residuals.  With ``opts.lam == "auto"`` the weight is recomputed
    from the residual norms at every step; a numeric ``lam`` is held fixed.
    """
    opts = opts or FitOptions()
    X, Y = _prep(X, Y)
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > X.N:
        raise ValueError(f"K={K} exceeds the sample count N={X.N}")
    if deflation not in _DEFLATORS:
        raise ValueError(f"unknown deflation {deflation!r}; choose from {DEFLATIONS}")
    if bic is None:
        if ranks_x is None or (ranks_y is None and variant != "matrix"):
            raise ValueError("give ranks_x and ranks_y, or bic=(r_x_max, r_y_max)")
        ranks_y = ranks_y if ranks_y is not None else [1] * K
        if len(ranks_x) != K or len(ranks_y) != K:
            raise ValueError(f"rank vectors must have length K={K}")

    stack = FactorStack()
    Xk, Yk = X, Y
    for k in range(K):
        nx, ny = frobenius_norm(Xk), frobenius_norm(Yk)
        lam = default_lambda(Xk, Yk) if opts.lam == "auto" else float(opts.lam)
        step_opts = opts.replace(lam=lam)
        grid: Optional[BicGrid] = None
        if bic is not None:
            _, _, f, grid = select_rank_single(Xk, Yk, bic[0], bic[1], variant, step_opts)
        else:
            f, _ = fit_single_variant(
                Xk, Yk, step_opts.replace(r_x=int(ranks_x[k]), r_y=int(ranks_y[k])), variant
            )
        stack.factors.append(f)
        stack.deflations.append(deflation)
        stack.residual_norms.append((nx, ny))
        stack.lambdas.append(lam)
        stack.bic_grids.append(grid)
        if k + 1 < K:
            Xk, Yk = deflate(Xk, Yk, f, deflation)
    return stack


def _projector(B: np.ndarray) -> np.ndarray:
    G = B.T @ B
    if np.linalg.cond(G) > 1e12:
        raise FitError(
            "concatenated factors are (numerically) collinear; "
            "cumulative variance explained is undefined"
        )
    return B @ np.linalg.solve(G, B.T)


def variance_explained(X, Y, stack: FactorStack, k: int) -> tuple[float, float]:
    """Cumulative share of ``||X||_F^2`` (and ``||Y||_F^2``) captured by factors ``1..k``.

    Projects ``X`` onto the span of the concatenated ``V_1..V_k`` in modes 1-2
    and of ``u_1..u_k`` in mode 3, with projectors ``B (B'B)^-1 B'`` so that
    non-orthogonal factors are handled.
    """
    X, Y = _prep(X, Y)
    if k == 0:
        return 0.0, 0.0
    if not 1 <= k <= len(stack):
        raise ValueError(f"k={k} outside 1..{len(stack)}")
    fs = stack.factors[:k]
    PU = _projector(np.column_stack([f.u for f in fs]))
    PV = _projector(np.hstack([f.V for f in fs]))
    PW = _projector(np.hstack([f.W for f in fs]))
    xs = np.einsum("kl,lij->kij", PU, PV @ X.slices @ PV)
    fx = float(np.sum(xs * xs)) / frobenius_norm(X) ** 2
    if _is_matrix(Y):
        ys = PW @ Y @ PU
    else:
        ys = np.einsum("kl,lij->kij", PU, PW @ Y.slices @ PW)
    fy = float(np.sum(ys * ys)) / frobenius_norm(Y) ** 2
    return fx, fy
