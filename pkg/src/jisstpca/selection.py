"""Rank, weight and factor-count selection."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import DegenerateSpectrumWarning
from .power import Factor, FitError, FitOptions, fit_single_variant
from .tensor import SemiSymTensor, frobenius_norm

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-300


def default_lambda(X, Y) -> float:
    """``||X||_F / (||X||_F + ||Y||_F)``."""
    nx, ny = frobenius_norm(X), frobenius_norm(Y)
    if nx + ny == 0:
        raise ValueError("both inputs are zero; the weight is undefined")
    return nx / (nx + ny)


def _dims(X, Y):
    p = X.p
    N = X.N
    if isinstance(Y, SemiSymTensor):
        return p, Y.p, N, Y.p * Y.p
    return p, Y.shape[0], N, Y.shape[0]


def bic_score(X, Y, Xhat, Yhat, r_x: int, r_y: int) -> float:
    """Single-factor BIC with the additive constant taken as zero.

    ``p^2 N log||X - Xhat||^2 + q^2 N log||Y - Yhat||^2 + (p r_x + q r_y) log((p^2 + q^2) N)``.

    For a covariate matrix ``Y`` (``q x N``) the ``q^2`` entries-per-sample
    count becomes ``q``.  Squared residual norms are floored at ``1e-300``.
    """
    p, q, N, qq = _dims(X, Y)
    rx = max(frobenius_norm(_arr(X) - _arr(Xhat)) ** 2, RESIDUAL_FLOOR)
    ry = max(frobenius_norm(_arr(Y) - _arr(Yhat)) ** 2, RESIDUAL_FLOOR)
    return (
        p * p * N * np.log(rx)
        + qq * N * np.log(ry)
        + (p * r_x + q * r_y) * np.log((p * p + qq) * N)
    )


def _arr(t):
    return t.slices if isinstance(t, SemiSymTensor) else np.asarray(t, dtype=np.float64)


@dataclass
class BicGrid:
    """BIC scores over candidate ranks ``1..r_x_max`` by ``1..r_y_max``.

    Failed cells hold ``nan`` and their messages are kept in ``failures``.
    """

    scores: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def argmin(self) -> tuple[int, int]:
        best = None
        for (i, j), s in np.ndenumerate(self.scores):
            if np.isnan(s):
                continue
            key = (s, i + j, i)
            if best is None or key < best[0]:
                best = (key, (i + 1, j + 1))
        if best is None:
            raise FitError("every cell of the BIC grid failed")
        return best[1]

    def to_dict(self) -> dict:
        return {
            "scores": [[None if np.isnan(s) else float(s) for s in row] for row in self.scores],
            "argmin": list(self.argmin),
            "failures": {f"{i},{j}": msg for (i, j), msg in self.failures.items()},
        }


def select_rank_single(
    X, Y, r_x_max: int, r_y_max: int, variant: str = "scalar", opts: Optional[FitOptions] = None
) -> tuple[int, int, Factor, BicGrid]:
    """Fit every rank pair on the grid and keep the BIC minimizer.

    Ties go to the smaller ``r_x + r_y``, then the smaller ``r_x``.  For the
    matrix variant the covariate rank is fixed at one and ``r_y_max`` is
    ignored.
    """
    opts = opts or FitOptions()
    if variant == "matrix":
        r_y_max = 1
    if r_x_max > X.p:
        raise ValueError(f"r_x_max={r_x_max} exceeds p={X.p}")
    if isinstance(Y, SemiSymTensor) and r_y_max > Y.p:
        raise ValueError(f"r_y_max={r_y_max} exceeds q={Y.p}")
    scores = np.full((r_x_max, r_y_max), np.nan)
    failures = {}
    fits = {}
    for i in range(1, r_x_max + 1):
        for j in range(1, r_y_max + 1):
            try:
                # over-ranked cells routinely hit tied (often zero) eigenvalues
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DegenerateSpectrumWarning)
                    f, _ = fit_single_variant(X, Y, opts.replace(r_x=i, r_y=j), variant)
            except FitError as exc:
                failures[(i, j)] = str(exc)
                log.debug("BIC cell (%d, %d) failed: %s", i, j, exc)
                continue
            scores[i - 1, j - 1] = bic_score(X, Y, f.reconstruct_x(), f.reconstruct_y(), i, j)
            fits[(i, j)] = f
    grid = BicGrid(scores=scores, failures=failures)
    r_x, r_y = grid.argmin
    return r_x, r_y, fits[(r_x, r_y)], grid


def select_K(
    X, Y, stack_builder: Callable[[int], object], threshold: float, K_max: int
) -> tuple[int, list[tuple[float, float]]]:
    """Smallest ``K`` whose cumulative variance explained reaches ``threshold`` in both modalities.

    ``stack_builder(K_max)`` must return a factor stack; deflation is
    sequential, so its first ``k`` factors are the ``k``-factor fit.  Falls
    back to ``K_max`` when the threshold is never reached.  Returns the
    chosen ``K`` and the scan of ``(fraction_x, fraction_y)`` for
    ``k = 1..K_max``.
    """
    from .multifactor import variance_explained

    if not 0 <= threshold < 1:
        raise ValueError("threshold must lie in [0, 1)")
    stack = stack_builder(K_max)
    scan = [variance_explained(X, Y, stack, k) for k in range(1, len(stack) + 1)]
    for k, (fx, fy) in enumerate(scan, start=1):
        if min(fx, fy) >= threshold:
            return k, scan
    return K_max, scan
