"""Monte-Carlo experiment runner: replicates, factor matching, metrics and reports.

Results are kept in long format, one row per
``(setting, snr, lam, replicate, method, metric)``.  Metric names:

``sin_u{k}``, ``sin_V{k}``, ``sin_W{k}``
    sin-theta errors (operator norm) of layer ``k`` against its matched truth.
``fro_V{k}``, ``fro_W{k}``
    Frobenius-norm versions for the network bases.
``sin_u{k}@{t}`` (and ``V``, ``W``)
    errors of the iterate at iteration ``t`` (single-factor fits only).
``ari_samples``, ``ari_x{k}``, ``ari_y{k}``
    adjusted Rand index of k-means on the estimated factors.
``rank_x{k}``, ``rank_y{k}``, ``ve_x{k}``, ``ve_y{k}``
    selected ranks and cumulative variance explained.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .baselines import ihooi, ihosvd
from .linalg import KMEANS_RESTARTS, adjusted_rand_index, kmeans
from .multifactor import fit_multifactor, variance_explained
from .power import FitError, FitOptions, fit_single_variant
from .selection import default_lambda
from .simgen import GroundTruth, SimSpec, generate
from .tensor import frobenius_norm

log = logging.getLogger(__name__)

KINDS = ("jisst", "g-jisst", "mt-jisst", "ihosvd", "ihooi")
_VARIANT = {"jisst": "scalar", "g-jisst": "generalized", "mt-jisst": "matrix"}
Z95 = 1.96
CSV_FIELDS = ("setting", "snr", "lam", "replicate", "method", "metric", "value")


@dataclass
class MethodSpec:
    """A method and its options.

    ``rank_mode`` is ``"oracle"`` (true ranks and ``K``) or ``"bic"``
    (per-factor BIC over ``1..r_max``).  ``iterations`` lists iteration
    counts at which single-factor iterates are also scored.
    """

    kind: str = "jisst"
    name: Optional[str] = None
    deflation: str = "subtract"
    rank_mode: str = "oracle"
    r_max: tuple = (5, 5)
    lam: object = "auto"
    init: str = "spectral"
    t_max: int = 20
    tol: float = 1e-6
    iterations: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown method {self.kind!r}; choose from {KINDS}")
        if self.rank_mode not in ("oracle", "bic"):
            raise ValueError(f"rank_mode must be 'oracle' or 'bic', got {self.rank_mode!r}")
        if self.name is None:
            self.name = {
                "jisst": "JisstPCA",
                "g-jisst": "G-JisstPCA",
                "mt-jisst": "MT-JisstPCA",
                "ihosvd": "iHOSVD",
                "ihooi": "iHOOI",
            }[self.kind]
        self.r_max = tuple(self.r_max)
        self.iterations = tuple(self.iterations)


@dataclass
class ExperimentConfig:
    sim: SimSpec
    methods: list
    replicates: int = 20
    snr_grid: Optional[list] = None
    lambda_grid: Optional[list] = None
    seed: int = 0
    cluster: bool = False
    cluster_seed: int = 0
    setting: str = ""
    threads: Optional[int] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        self.methods = [m if isinstance(m, MethodSpec) else MethodSpec(**m) for m in self.methods]
        if self.lambda_grid is not None:
            for lam in self.lambda_grid:
                if not 0.0 < lam < 1.0:
                    raise ValueError(f"lambda grid values must lie in (0, 1), got {lam}")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("sim", "methods")}
        d["sim"] = self.sim.to_dict()
        d["methods"] = [asdict(m) for m in self.methods]
        return d


def _summary_stats(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    mean = float(v.mean())
    sd = float(v.std(ddof=1)) if n > 1 else 0.0
    return {"n": n, "mean": mean, "sd": sd, "half_width": Z95 * sd / np.sqrt(n)}


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def aggregate(self) -> list[dict]:
        """Mean, s.d. and normal 95% half-width per ``(setting, snr, lam, method, metric)``."""
        groups: dict = {}
        for r in self.rows:
            key = (r["setting"], r["snr"], r["lam"], r["method"], r["metric"])
            groups.setdefault(key, []).append(r["value"])
        out = []
        for key in sorted(groups, key=_sort_key):
            out.append(dict(zip(("setting", "snr", "lam", "method", "metric"), key), **_summary_stats(groups[key])))
        return out

    def values(self, method, metric: str, snr=None, lam=None, setting=None) -> np.ndarray:
        """Per-replicate values; ``None`` filters match anything."""
        return np.array(
            [
                r["value"]
                for r in self.rows
                if (method is None or r["method"] == method)
                and r["metric"] == metric
                and (snr is None or r["snr"] == snr)
                and (lam is None or r["lam"] == lam)
                and (setting is None or r["setting"] == setting)
            ]
        )

    def mean(self, method: str, metric: str, snr=None, lam=None, setting=None) -> float:
        v = self.values(method, metric, snr, lam, setting)
        if v.size == 0:
            raise KeyError(f"no rows for {method}/{metric} at snr={snr}, lam={lam}")
        return float(v.mean())

    def failure_rate(self, method: Optional[str] = None) -> float:
        """Failed (replicate, method) cells over all attempted ones."""
        attempted = self.metadata.get("attempted", {})
        if method is None:
            total = sum(attempted.values())
            failed = len(self.failures)
        else:
            total = attempted.get(method, 0)
            failed = sum(1 for f in self.failures if f["method"] == method)
        return failed / total if total else 0.0

    def merge(self, other: "EvalReport") -> "EvalReport":
        attempted = dict(self.metadata.get("attempted", {}))
        for k, v in other.metadata.get("attempted", {}).items():
            attempted[k] = attempted.get(k, 0) + v
        meta = dict(self.metadata)
        meta["attempted"] = attempted
        meta.setdefault("parts", []).append(other.metadata.get("config"))
        return EvalReport(self.rows + other.rows, self.failures + other.failures, meta)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# jisstpca {__version__}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            for r in self.rows:
                w.writerow([_fmt(r[k]) for k in CSV_FIELDS])

    @classmethod
    def from_csv(cls, path) -> "EvalReport":
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        rows = []
        for rec in csv.DictReader(lines):
            rows.append(
                {
                    "setting": rec["setting"],
                    "snr": _parse_num(rec["snr"]),
                    "lam": _parse_lam(rec["lam"]),
                    "replicate": int(rec["replicate"]),
                    "method": rec["method"],
                    "metric": rec["metric"],
                    "value": float(rec["value"]),
                }
            )
        return cls(rows=rows)

    def summary(self) -> dict:
        return {
            "aggregates": self.aggregate(),
            "failures": self.failures,
            "metadata": self.metadata,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _sort_key(key):
    return tuple((0, x) if isinstance(x, (int, float)) else (1, str(x)) for x in key)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def _parse_num(s):
    return None if s == "" else float(s)


def _parse_lam(s):
    try:
        return float(s)
    except ValueError:
        return s


def match_factors(est_u: Sequence[np.ndarray], true_u: Sequence[np.ndarray]) -> list:
    """Greedy matching on ``|u_hat' u*|``.

    Returns, for each true factor, the index of its estimate or ``None``
    when there are fewer estimates than truths.
    """
    if not est_u:
        return [None] * len(true_u)
    C = np.abs(np.column_stack(est_u).T @ np.column_stack(true_u))
    out = [None] * len(true_u)
    C = C.copy()
    for _ in range(min(C.shape)):
        i, j = np.unravel_index(np.argmax(C), C.shape)
        out[j] = int(i)
        C[i, :] = -1.0
        C[:, j] = -1.0
    return out


def subspace_error(B_hat, B_true, norm: str = "op") -> float:
    """``||(I - B_hat B_hat') B_true||``; equals sin-theta when ranks agree and is 1 when the estimate misses a direction."""
    Bh = np.atleast_2d(np.asarray(B_hat, dtype=np.float64).T).T
    Bt = np.atleast_2d(np.asarray(B_true, dtype=np.float64).T).T
    R = Bt - Bh @ (Bh.T @ Bt)
    if norm == "op":
        return float(min(np.linalg.norm(R, 2), 1.0))
    return float(min(np.linalg.norm(R), np.sqrt(Bt.shape[1])))


def vector_error(u_hat, u_true) -> float:
    u_hat = np.asarray(u_hat, dtype=np.float64)
    u_true = np.asarray(u_true, dtype=np.float64)
    return float(min(np.linalg.norm(u_true - (u_hat @ u_true) * u_hat), 1.0))


def factor_errors(layers, truth: GroundTruth) -> dict:
    """sin-theta errors of matched layers; unmatched truths score 1."""
    true = truth.stack.layers()
    match = match_factors([l[0] for l in layers], [t[0] for t in true])
    out = {}
    for k, (j, (u, V, W)) in enumerate(zip(match, true), start=1):
        if j is None:
            for m in ("sin_u", "sin_V", "sin_W"):
                out[f"{m}{k}"] = 1.0
            out[f"fro_V{k}"] = float(np.sqrt(V.shape[1]))
            out[f"fro_W{k}"] = float(np.sqrt(W.shape[1]))
            continue
        uh, Vh, Wh = layers[j]
        out[f"sin_u{k}"] = vector_error(uh, u)
        out[f"sin_V{k}"] = subspace_error(Vh, V)
        out[f"sin_W{k}"] = subspace_error(Wh, W)
        out[f"fro_V{k}"] = subspace_error(Vh, V, "fro")
        out[f"fro_W{k}"] = subspace_error(Wh, W, "fro")
    return out


def cluster_eval(layers, truth: GroundTruth, seed: int = 0) -> dict:
    """ARI of k-means on estimated factors against the true labels.

    Samples are clustered on the rows of ``[u_1 .. u_K]`` with as many
    clusters as true sample groups; nodes of layer ``k`` on the rows of its
    matched ``V_k`` (``W_k``) with as many clusters as that layer's
    communities.  ``layers`` is a factor stack or a list of ``(u, V, W)``.
    """
    if hasattr(layers, "layers"):
        layers = layers.layers()
    if truth.sample_labels is None or truth.node_labels_x is None:
        raise ValueError("ground truth carries no cluster labels")
    out = {}
    n_groups = len(np.unique(truth.sample_labels))
    U = np.column_stack([l[0] for l in layers])
    out["ari_samples"] = adjusted_rand_index(kmeans(U, n_groups, seed=seed), truth.sample_labels)
    match = match_factors([l[0] for l in layers], [f.u for f in truth.stack])
    for k, j in enumerate(match):
        for side, labels_list, idx in (("x", truth.node_labels_x, 1), ("y", truth.node_labels_y, 2)):
            if labels_list is None:
                continue
            labels = labels_list[k]
            if j is None:
                out[f"ari_{side}{k + 1}"] = 0.0
                continue
            n_comm = len(np.unique(labels))
            out[f"ari_{side}{k + 1}"] = adjusted_rand_index(
                kmeans(layers[j][idx], n_comm, seed=seed), labels
            )
    return out


def _fit_options(m: MethodSpec, lam) -> FitOptions:
    return FitOptions(lam=lam, t_max=m.t_max, tol=m.tol, init=m.init)


def _oracle_ranks(truth: GroundTruth):
    return truth.stack.ranks_x, truth.stack.ranks_y


def run_method(m: MethodSpec, X, Y, truth: GroundTruth, lam) -> tuple[list, dict]:
    """Fit one method; return its layers ``[(u, V, W)]`` and extra metrics."""
    rx, ry = _oracle_ranks(truth)
    K = len(truth.stack)
    extra: dict = {}
    if m.kind in ("ihosvd", "ihooi"):
        fit = ihosvd(X, Y, rx, ry) if m.kind == "ihosvd" else ihooi(X, Y, rx, ry, k_max=m.t_max, tol=m.tol)
        return fit.layers(), extra
    variant = _VARIANT[m.kind]
    opts = _fit_options(m, lam)
    if K == 1 and m.rank_mode == "oracle":
        f, trace = fit_single_variant(X, Y, opts.replace(r_x=rx[0], r_y=ry[0]), variant)
        t_u = truth.stack[0]
        for t in m.iterations:
            extra[f"sin_u1@{t}"] = vector_error(trace.u_at(t), t_u.u)
            extra[f"sin_V1@{t}"] = subspace_error(trace.V_at(t), t_u.V)
            extra[f"sin_W1@{t}"] = subspace_error(trace.W_at(t), t_u.W)
        extra["iterations"] = float(trace.n_iter)
        layers = [(f.u, f.V, f.W)]
        stack = None
    else:
        if m.rank_mode == "bic":
            stack = fit_multifactor(
                X, Y, K, bic=m.r_max, deflation=m.deflation, variant=variant, opts=opts
            )
        else:
            stack = fit_multifactor(
                X, Y, K, rx, ry, deflation=m.deflation, variant=variant, opts=opts
            )
        layers = stack.layers()
        for k, f in enumerate(stack, start=1):
            extra[f"rank_x{k}"] = float(f.r_x)
            extra[f"rank_y{k}"] = float(f.r_y)
        try:
            for k in range(1, len(stack) + 1):
                fx, fy = variance_explained(X, Y, stack, k)
                extra[f"ve_x{k}"] = fx
                extra[f"ve_y{k}"] = fy
        except FitError as exc:
            log.debug("variance explained skipped: %s", exc)
    return layers, extra


def _cell(cfg: ExperimentConfig, snr, rep: int):
    spec = cfg.sim.with_(seed=cfg.seed, replicate=rep, **({} if snr is None else {"snr": snr}))
    X, Y, truth = generate(spec)
    lams = cfg.lambda_grid if cfg.lambda_grid is not None else [None]
    rows, failures = [], []
    markers = {
        "surrogate": default_lambda(X, Y),
        "oracle": frobenius_norm(truth.X_signal)
        / (frobenius_norm(truth.X_signal) + frobenius_norm(truth.Y_signal)),
    }
    snr_val = float(spec.snr) if spec.model != "sbm" else None
    for lam in lams:
        for m in cfg.methods:
            use_lam = m.lam if lam is None else lam
            base = {
                "setting": cfg.setting,
                "snr": snr_val,
                "lam": use_lam if isinstance(use_lam, str) else float(use_lam),
                "replicate": rep,
                "method": m.name,
            }
            try:
                layers, extra = run_method(m, X, Y, truth, use_lam)
                metrics = factor_errors(layers, truth)
                metrics.update(extra)
                if cfg.cluster:
                    metrics.update(cluster_eval(layers, truth, seed=cfg.cluster_seed))
            except (FitError, np.linalg.LinAlgError) as exc:
                failures.append(dict(base, cause=f"{type(exc).__name__}: {exc}"))
                continue
            for name in sorted(metrics):
                rows.append(dict(base, metric=name, value=float(metrics[name])))
    return rows, failures, markers


def default_threads() -> int:
    env = os.environ.get("JISST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """Run every (SNR, replicate) cell and collect long-format rows.

    Cells run on a thread pool; results are re-ordered by (SNR, replicate)
    so the report does not depend on scheduling.  Fit failures are recorded
    in ``report.failures`` with their cause and excluded from the rows.
    """
    grid = cfg.snr_grid if cfg.snr_grid is not None else [None]
    cells = [(i, snr, rep) for i, snr in enumerate(grid) for rep in range(cfg.replicates)]
    threads = cfg.threads or default_threads()
    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _cell(cfg, c[1], c[2]), cells))
    else:
        results = [_cell(cfg, snr, rep) for _, snr, rep in cells]
    report = EvalReport()
    markers = {"surrogate": [], "oracle": []}
    for rows, failures, mk in results:
        report.rows.extend(rows)
        report.failures.extend(failures)
        for k in markers:
            markers[k].append(mk[k])
    n_lam = len(cfg.lambda_grid) if cfg.lambda_grid is not None else 1
    report.metadata = {
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "config": cfg.to_dict(),
        "attempted": {m.name: len(cells) * n_lam for m in cfg.methods},
        "lambda_markers": {k: float(np.mean(v)) for k, v in markers.items()},
        "interval": f"mean +/- {Z95} sd / sqrt(n), normal approximation",
        "kmeans_restarts": KMEANS_RESTARTS,
    }
    return report


def lambda_sweep(cfg: ExperimentConfig, lambda_grid: Sequence[float]) -> EvalReport:
    """Rerun ``cfg`` at each fixed weight in ``lambda_grid`` on shared data.

    ``report.metadata["lambda_markers"]`` holds the replicate-averaged oracle
    weight ``||X*|| / (||X*|| + ||Y*||)`` and its data surrogate.
    """
    return run_experiment(replace(cfg, lambda_grid=list(lambda_grid)))
