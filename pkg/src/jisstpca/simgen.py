"""Seeded generators for the simulation protocols.

Random streams come from NumPy's Philox counter-based generator keyed by
``(seed, replicate, crc32(purpose))``, so each purpose (factors, noise,
cluster draws, ...) has its own stream that does not depend on the order
in which other streams are consumed.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .linalg import top_r_symmetric
from .multifactor import FactorStack
from .power import Factor
from .tensor import SemiSymTensor, project_out_ones

__all__ = [
    "SpecError",
    "SbmLayer",
    "SimSpec",
    "GroundTruth",
    "make_rng",
    "random_orthonormal",
    "gen_noise",
    "gen_factor_model",
    "gen_sbm_population",
    "generate",
    "warm_init_diagnostic",
    "default_sbm_layers",
]

MODELS = ("scalar", "generalized", "matrix", "sbm")
STRUCTURES = ("unstructured", "orthogonal", "structured")


class SpecError(ValueError):
    """Invalid simulation spec; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


def make_rng(seed: int, replicate: int = 0, purpose: str = "") -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(replicate), zlib.crc32(purpose.encode())]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def random_orthonormal(p: int, r: int, seed=0) -> np.ndarray:
    """Gaussian ``p x r`` matrix orthonormalized by QR with a positive-diagonal ``R``.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if r > p:
        raise ValueError(f"cannot draw {r} orthonormal columns in dimension {p}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, 0, "orthonormal")
    Q, R = np.linalg.qr(rng.standard_normal((p, r)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def gen_noise(p: int, N: int, sigma: float, seed=0, diag_var: float = 2.0) -> SemiSymTensor:
    """Symmetric Gaussian slices: off-diagonal variance ``sigma^2``, diagonal ``diag_var * sigma^2``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return SemiSymTensor.zeros(p, N)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, 0, "noise")
    G = rng.standard_normal((N, p, p))
    E = (G + G.transpose(0, 2, 1)) / np.sqrt(2.0)
    if diag_var != 2.0:
        idx = np.arange(p)
        E[:, idx, idx] *= np.sqrt(diag_var / 2.0)
    return SemiSymTensor(sigma * E)


@dataclass
class SbmLayer:
    """One stochastic block model.

    ``blocks`` lists consecutive node groups as ``[fraction, community]``
    pairs (the rows of the membership matrix); ``B`` is the community
    connection-probability matrix.
    """

    blocks: list
    B: list

    def sizes(self, n: int) -> list[int]:
        raw = [int(round(f * n)) for f, _ in self.blocks]
        raw[-1] = n - sum(raw[:-1])
        return raw

    def labels(self, n: int) -> np.ndarray:
        return np.concatenate(
            [np.full(s, c, dtype=int) for s, (_, c) in zip(self.sizes(n), self.blocks)]
        )

    def probabilities(self, n: int) -> np.ndarray:
        B = np.asarray(self.B, dtype=np.float64)
        lab = self.labels(n)
        return B[np.ix_(lab, lab)]

    @property
    def n_communities(self) -> int:
        return len(self.B)


def default_sbm_layers():
    """Two SBM pairs (``x`` list, ``y`` list): three-block and two-community layers."""
    x = [
        SbmLayer([[0.4, 0], [0.3, 1], [0.3, 2]], [[0.8, 0.3, 0.3], [0.3, 0.8, 0.3], [0.3, 0.3, 0.8]]),
        SbmLayer([[0.3, 0], [0.2, 1], [0.2, 0], [0.3, 1]], [[0.6, 0.3], [0.3, 0.6]]),
    ]
    y = [
        SbmLayer([[0.4, 0], [0.4, 1], [0.2, 2]], [[0.7, 0.3, 0.3], [0.3, 0.7, 0.3], [0.3, 0.3, 0.7]]),
        SbmLayer([[0.3, 0], [0.4, 1], [0.3, 0]], [[0.5, 0.3], [0.3, 0.5]]),
    ]
    return x, y


@dataclass
class SimSpec:
    """Generative-model description.

    Signal strengths follow ``d_{x,k} = snr (sqrt(p) + sqrt(N)) strength_x[k]``
    and ``d_{y,k} = snr (sqrt(q) + sqrt(N)) strength_y[k]``.  For the
    generalized model, ``eig_x[k]`` multiplies ``d_{x,k}`` column by column.
    ``model="sbm"`` ignores the signal fields and uses ``sbm_x``/``sbm_y``
    (defaulting to :func:`default_sbm_layers`).
    """

    model: str = "scalar"
    p: int = 30
    q: int = 30
    N: int = 40
    K: int = 1
    ranks_x: list = field(default_factory=lambda: [3])
    ranks_y: list = field(default_factory=lambda: [2])
    snr: float = 2.0
    strength_x: Optional[list] = None
    strength_y: Optional[list] = None
    eig_x: Optional[list] = None
    eig_y: Optional[list] = None
    structure: str = "unstructured"
    sigma: float = 1.0
    diag_var: float = 2.0
    cluster_probs: list = field(default_factory=lambda: [0.75, 0.25])
    sbm_x: Optional[list] = None
    sbm_y: Optional[list] = None
    seed: int = 0
    replicate: int = 0

    def __post_init__(self):
        self.sbm_x = [l if isinstance(l, SbmLayer) else SbmLayer(**l) for l in self.sbm_x or []] or None
        self.sbm_y = [l if isinstance(l, SbmLayer) else SbmLayer(**l) for l in self.sbm_y or []] or None
        self.validate()

    def validate(self):
        if self.model not in MODELS:
            raise SpecError("model", f"must be one of {MODELS}, got {self.model!r}")
        if self.structure not in STRUCTURES:
            raise SpecError("structure", f"must be one of {STRUCTURES}, got {self.structure!r}")
        for name in ("p", "q", "N", "K"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise SpecError(name, f"must be a positive integer, got {v!r}")
        if self.sigma < 0:
            raise SpecError("sigma", "must be non-negative")
        if self.diag_var < 0:
            raise SpecError("diag_var", "must be non-negative")
        probs = self.cluster_probs
        for i, pr in enumerate(probs):
            if not 0.0 <= pr <= 1.0:
                raise SpecError("cluster_probs", f"entry {i} = {pr} is not a probability in [0, 1]")
        if self.model == "sbm":
            if abs(sum(probs) - 1.0) > 1e-9:
                raise SpecError("cluster_probs", f"must sum to 1, got {sum(probs)}")
            for name in ("sbm_x", "sbm_y"):
                layers = getattr(self, name)
                if layers is None:
                    continue
                if len(layers) != len(probs):
                    raise SpecError(name, f"needs one layer per cluster ({len(probs)})")
                for layer in layers:
                    total = sum(f for f, _ in layer.blocks)
                    if abs(total - 1.0) > 1e-9:
                        raise SpecError(name, f"block fractions sum to {total}, not 1")
                    B = np.asarray(layer.B, dtype=float)
                    if B.ndim != 2 or B.shape[0] != B.shape[1] or not np.allclose(B, B.T):
                        raise SpecError(name, "B must be a symmetric square matrix")
                    if np.any(B < 0) or np.any(B > 1):
                        raise SpecError(name, "B entries must be probabilities in [0, 1]")
            return
        if not self.snr > 0:
            raise SpecError("snr", f"must be positive, got {self.snr}")
        if len(self.ranks_x) != self.K:
            raise SpecError("ranks_x", f"needs K={self.K} entries")
        if self.model != "matrix" and len(self.ranks_y) != self.K:
            raise SpecError("ranks_y", f"needs K={self.K} entries")
        for name in ("strength_x", "strength_y"):
            v = getattr(self, name)
            if v is not None and len(v) != self.K:
                raise SpecError(name, f"needs K={self.K} entries")
        if self.model == "generalized":
            for name, ranks in (("eig_x", self.ranks_x), ("eig_y", self.ranks_y)):
                v = getattr(self, name)
                if v is None:
                    continue
                if len(v) != self.K or any(len(e) != r for e, r in zip(v, ranks)):
                    raise SpecError(name, "needs one list of r_k multipliers per layer")
        if self.structure == "orthogonal":
            if sum(self.ranks_x) > self.p:
                raise SpecError("ranks_x", "orthogonal layers need sum(ranks_x) <= p")
            if self.model != "matrix" and sum(self.ranks_y) > self.q:
                raise SpecError("ranks_y", "orthogonal layers need sum(ranks_y) <= q")
            if self.K > self.N:
                raise SpecError("K", "orthogonal layers need K <= N")
        if self.structure == "structured" and self.K != 2:
            raise SpecError("structure", "structured factors are defined for K=2 (block + star layers)")
        if any(r > self.p for r in self.ranks_x):
            raise SpecError("ranks_x", f"ranks must not exceed p={self.p}")
        if self.model != "matrix" and any(r > self.q for r in self.ranks_y):
            raise SpecError("ranks_y", f"ranks must not exceed q={self.q}")

    def d_x(self) -> np.ndarray:
        s = self.strength_x if self.strength_x is not None else [1.0] * self.K
        return self.snr * (np.sqrt(self.p) + np.sqrt(self.N)) * np.asarray(s, dtype=float)

    def d_y(self) -> np.ndarray:
        s = self.strength_y if self.strength_y is not None else [1.0] * self.K
        return self.snr * (np.sqrt(self.q) + np.sqrt(self.N)) * np.asarray(s, dtype=float)

    def with_(self, **changes) -> "SimSpec":
        d = self.to_dict()
        d.update(changes)
        return SimSpec.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        known = set(cls.__dataclass_fields__)
        for key in d:
            if key not in known:
                raise SpecError(key, "unknown field")
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError("spec", str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class GroundTruth:
    stack: FactorStack
    sample_labels: Optional[np.ndarray] = None
    node_labels_x: Optional[list] = None
    node_labels_y: Optional[list] = None
    warm_ratios: list = field(default_factory=list)
    X_signal: Optional[SemiSymTensor] = None
    Y_signal: object = None

    def to_dict(self) -> dict:
        def lab(v):
            return None if v is None else [np.asarray(a).tolist() for a in v]

        return {
            "factors": [f.to_dict() for f in self.stack.factors],
            "sample_labels": None if self.sample_labels is None else self.sample_labels.tolist(),
            "node_labels_x": lab(self.node_labels_x),
            "node_labels_y": lab(self.node_labels_y),
            "warm_ratios": [None if r is None else float(r) for r in self.warm_ratios],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        def lab(v):
            return None if v is None else [np.asarray(a, dtype=int) for a in v]

        return cls(
            stack=FactorStack(factors=[Factor.from_dict(f) for f in d["factors"]]),
            sample_labels=None if d.get("sample_labels") is None else np.asarray(d["sample_labels"]),
            node_labels_x=lab(d.get("node_labels_x")),
            node_labels_y=lab(d.get("node_labels_y")),
            warm_ratios=d.get("warm_ratios", []),
        )


def warm_init_diagnostic(u_star) -> float:
    """Ratio of the empirical variance of ``u*``'s entries to their squared mean."""
    u = np.asarray(u_star, dtype=np.float64)
    m = u.mean()
    if abs(m) < 1e-15:
        raise ValueError("entries of u* average to zero; warm initialization is inapplicable")
    return float(np.mean((u - m) ** 2) / m**2)


def _safe_warm(u):
    try:
        return warm_init_diagnostic(u)
    except ValueError:
        return None


def _unit(v):
    return v / np.linalg.norm(v)


def _block_basis(n: int, r: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``r`` disjoint blocks; row ``i`` has one N(3, 1) entry in its block's column."""
    while True:
        lab = rng.integers(0, r, size=n)
        if len(np.unique(lab)) == r:
            break
    B = np.zeros((n, r))
    B[np.arange(n), lab] = rng.normal(3.0, 1.0, size=n)
    Q, R = np.linalg.qr(B)
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0), lab


def _star_basis(n: int, r: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Top-``r`` eigenvectors of the unnormalized Laplacian of ``r`` disjoint stars."""
    while True:
        lab = rng.integers(0, r, size=n)
        if np.all(np.bincount(lab, minlength=r) >= 3):
            break
    A = np.zeros((n, n))
    for c in range(r):
        members = np.flatnonzero(lab == c)
        hub = members[0]
        A[hub, members[1:]] = 1.0
        A[members[1:], hub] = 1.0
    L = np.diag(A.sum(axis=1)) - A
    V, _ = top_r_symmetric(L, r)
    return V, lab


def _structured_population(N: int, rng):
    mu = rng.uniform(0.0, 1.0, size=3)
    comp = rng.integers(0, 3, size=N)
    U = rng.normal(mu[comp][:, None], 0.05, size=(N, 2))
    return [_unit(U[:, 0]), _unit(U[:, 1])], comp


def _network_bases(n, ranks, structure, rng):
    if structure == "orthogonal":
        Q = random_orthonormal(n, sum(ranks), rng)
        cuts = np.cumsum([0] + list(ranks))
        return [Q[:, cuts[k] : cuts[k + 1]] for k in range(len(ranks))], None
    if structure == "structured":
        V1, lab1 = _block_basis(n, ranks[0], rng)
        V2, lab2 = _star_basis(n, ranks[1], rng)
        return [V1, V2], [lab1, lab2]
    return [random_orthonormal(n, r, rng) for r in ranks], None


def _check_identifiable(bases, what):
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            M = np.hstack([bases[i], bases[j]])
            s = np.linalg.svd(M, compute_uv=False)
            if s.size < M.shape[1] or s.min() <= 1e-8:
                raise SpecError(what, f"layers {i + 1} and {j + 1} are linearly dependent")


def gen_factor_model(spec: SimSpec):
    """Draw ``(X, Y, truth)`` from the scalar, generalized or matrix-tensor factor model."""
    if spec.model == "sbm":
        return gen_sbm_population(spec)
    K = spec.K
    rng_f = make_rng(spec.seed, spec.replicate, "factors")
    sample_labels = None
    if spec.structure == "structured":
        us, sample_labels = _structured_population(spec.N, rng_f)
    elif spec.structure == "orthogonal":
        Uq = random_orthonormal(spec.N, K, rng_f)
        us = [Uq[:, k] for k in range(K)]
    else:
        us = [_unit(rng_f.standard_normal(spec.N)) for _ in range(K)]
    Vs, lab_x = _network_bases(spec.p, spec.ranks_x, spec.structure, rng_f)
    if spec.model == "matrix":
        Ws = [_unit(rng_f.standard_normal(spec.q))[:, None] for _ in range(K)]
        lab_y = None
    else:
        Ws, lab_y = _network_bases(spec.q, spec.ranks_y, spec.structure, rng_f)
    _check_identifiable(Vs, "ranks_x")
    if spec.model != "matrix":
        _check_identifiable(Ws, "ranks_y")
    _check_identifiable([u[:, None] for u in us], "K")

    dx, dy = spec.d_x(), spec.d_y()
    factors = []
    for k in range(K):
        if spec.model == "generalized":
            ex = spec.eig_x[k] if spec.eig_x is not None else [1.0] * spec.ranks_x[k]
            ey = spec.eig_y[k] if spec.eig_y is not None else [1.0] * spec.ranks_y[k]
            sx = dx[k] * np.asarray(ex, dtype=float)
            sy = dy[k] * np.asarray(ey, dtype=float)
        else:
            sx, sy = float(dx[k]), float(dy[k])
        factors.append(Factor(u=us[k], V=Vs[k], W=Ws[k], scale_x=sx, scale_y=sy, variant=spec.model))

    Xs = np.zeros((spec.N, spec.p, spec.p))
    for f in factors:
        Xs += f.reconstruct_x().slices
    X_signal = SemiSymTensor(Xs)
    Ex = gen_noise(spec.p, spec.N, spec.sigma, make_rng(spec.seed, spec.replicate, "noise-x"), spec.diag_var)
    X = SemiSymTensor(Xs + Ex.slices)
    if spec.model == "matrix":
        Y_signal = sum(f.reconstruct_y() for f in factors)
        rng_y = make_rng(spec.seed, spec.replicate, "noise-y")
        Y = Y_signal + spec.sigma * rng_y.standard_normal((spec.q, spec.N))
    else:
        Ys = np.zeros((spec.N, spec.q, spec.q))
        for f in factors:
            Ys += f.reconstruct_y().slices
        Y_signal = SemiSymTensor(Ys)
        Ey = gen_noise(
            spec.q, spec.N, spec.sigma, make_rng(spec.seed, spec.replicate, "noise-y"), spec.diag_var
        )
        Y = SemiSymTensor(Ys + Ey.slices)

    truth = GroundTruth(
        stack=FactorStack(factors=factors),
        sample_labels=sample_labels,
        node_labels_x=lab_x,
        node_labels_y=lab_y,
        warm_ratios=[_safe_warm(u) for u in us],
        X_signal=X_signal,
        Y_signal=Y_signal,
    )
    return X, Y, truth


def _sbm_slice(P: np.ndarray, rng) -> np.ndarray:
    n = P.shape[0]
    iu = np.triu_indices(n, k=1)
    A = np.zeros((n, n))
    A[iu] = (rng.random(iu[0].size) < P[iu]).astype(float)
    return A + A.T


def _sbm_truth(P: np.ndarray, n_comm: int):
    n = P.shape[0]
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    Pt = J @ P @ J
    V, vals = top_r_symmetric(0.5 * (Pt + Pt.T), n_comm - 1)
    return V, vals


def sbm_adjacency(spec: SimSpec):
    """Raw binary adjacency tensors and sample clusters (before projection)."""
    xs, ys = default_sbm_layers()
    lx = spec.sbm_x or xs
    ly = spec.sbm_y or ys
    rng_c = make_rng(spec.seed, spec.replicate, "clusters")
    probs = np.asarray(spec.cluster_probs, dtype=float)
    while True:
        clusters = rng_c.choice(len(probs), size=spec.N, p=probs)
        if len(np.unique(clusters)) == len(probs):
            break
    Px = [l.probabilities(spec.p) for l in lx]
    Py = [l.probabilities(spec.q) for l in ly]
    rng_a = make_rng(spec.seed, spec.replicate, "adjacency")
    Ax = np.stack([_sbm_slice(Px[c], rng_a) for c in clusters])
    Ay = np.stack([_sbm_slice(Py[c], rng_a) for c in clusters])
    return Ax, Ay, clusters, (lx, ly, Px, Py)


def gen_sbm_population(spec: SimSpec):
    """Two-cluster population of SBM network pairs, projected off the all-ones vector.

    Samples join cluster ``c`` with probability ``cluster_probs[c]``; their
    ``X`` and ``Y`` slices are zero-diagonal Bernoulli draws from cluster
    ``c``'s probability matrices.  True network factors are the top
    ``communities - 1`` eigenvectors of the projected probability matrices,
    true population factors the normalized cluster indicators.
    """
    Ax, Ay, clusters, (lx, ly, Px, Py) = sbm_adjacency(spec)
    X = project_out_ones(SemiSymTensor(Ax))
    Y = project_out_ones(SemiSymTensor(Ay))
    factors = []
    for c in range(len(spec.cluster_probs)):
        u = _unit((clusters == c).astype(float))
        V, dvx = _sbm_truth(Px[c], lx[c].n_communities)
        W, dvy = _sbm_truth(Py[c], ly[c].n_communities)
        # the expected slice is the projected P, so the layer scale carries sqrt(n_c)
        s = np.sqrt((clusters == c).sum())
        factors.append(Factor(u=u, V=V, W=W, scale_x=s * dvx, scale_y=s * dvy, variant="generalized"))
    Xs = sum(f.reconstruct_x().slices for f in factors)
    Ys = sum(f.reconstruct_y().slices for f in factors)
    truth = GroundTruth(
        stack=FactorStack(factors=factors),
        sample_labels=clusters,
        node_labels_x=[l.labels(spec.p) for l in lx],
        node_labels_y=[l.labels(spec.q) for l in ly],
        warm_ratios=[_safe_warm(f.u) for f in factors],
        X_signal=SemiSymTensor(Xs),
        Y_signal=SemiSymTensor(Ys),
    )
    return X, Y, truth


def generate(spec: SimSpec):
    return gen_factor_model(spec)
