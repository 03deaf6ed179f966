"""Preset benchmarks mirroring the simulation studies, with CSV and SVG output."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evaluate import EvalReport, ExperimentConfig, MethodSpec, lambda_sweep, run_experiment
from .simgen import SimSpec
from .svg import line_plot

BENCHMARKS = ("fig1", "fig2", "table1", "lambda")
TABLE1_HEADER = ["row", "JisstPCA", "G-JisstPCA", "iHOSVD", "iHOOI"]
TABLE1_ROWS = [
    ("Samples", "ari_samples"),
    ("Network 1 of X", "ari_x1"),
    ("Network 2 of X", "ari_x2"),
    ("Network 1 of Y", "ari_y1"),
    ("Network 2 of Y", "ari_y2"),
]

FIG1_SNR = [1.5, 3.0, 6.0, 12.0, 24.0]
FIG2_SNR = [2.0, 4.0, 8.0, 16.0]
LAMBDA_GRID = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]


def fig1_configs(replicates=20, seed=0, threads=None):
    """Single-factor studies: scalar data for JisstPCA, generalized data for G-JisstPCA."""
    iters = tuple(range(1, 11))
    scalar = SimSpec(p=60, q=60, N=120, ranks_x=[3], ranks_y=[2], strength_y=[1.2])
    general = scalar.with_(model="generalized", eig_x=[[1.5, 1.0, 0.8]], eig_y=[[1.0, 0.8]])
    common = dict(replicates=replicates, snr_grid=FIG1_SNR, seed=seed, threads=threads)
    return [
        ExperimentConfig(scalar, [MethodSpec("jisst", lam=0.5, iterations=iters)], setting="scalar", **common),
        ExperimentConfig(general, [MethodSpec("g-jisst", lam=0.5, iterations=iters)], setting="generalized", **common),
    ]


def two_factor_spec(**changes) -> SimSpec:
    base = SimSpec(
        p=150,
        q=50,
        N=50,
        K=2,
        ranks_x=[3, 2],
        ranks_y=[3, 2],
        snr=8.0,
        strength_x=[1.0, 0.5],
        strength_y=[1.0, 0.5],
    )
    return base.with_(**changes) if changes else base


def fig2_configs(replicates=10, seed=0, threads=None):
    """Two-factor comparison against the Tucker baselines."""
    common = dict(replicates=replicates, snr_grid=FIG2_SNR, seed=seed, threads=threads)
    baselines = [MethodSpec("ihosvd"), MethodSpec("ihooi")]
    nonorth = two_factor_spec()
    general = two_factor_spec(
        model="generalized",
        strength_x=[1.0, 1.0],
        strength_y=[1.0, 1.0],
        eig_x=[[2.0, 1.5, 1.2], [1.0, 0.8]],
        eig_y=[[2.0, 1.5, 1.2], [1.0, 0.8]],
    )
    return [
        ExperimentConfig(
            nonorth,
            [MethodSpec("jisst"), MethodSpec("jisst", name="JisstPCA-BIC", rank_mode="bic")] + baselines,
            setting="nonorthogonal",
            **common,
        ),
        ExperimentConfig(
            general,
            [MethodSpec("g-jisst"), MethodSpec("g-jisst", name="G-JisstPCA-BIC", rank_mode="bic")] + baselines,
            setting="generalized",
            **common,
        ),
    ]


def table1_config(replicates=20, seed=0, threads=None):
    sim = SimSpec(model="sbm", p=80, q=50, N=40)
    methods = [
        MethodSpec("jisst", deflation="partial-u", rank_mode="bic"),
        MethodSpec("g-jisst", deflation="partial-u", rank_mode="bic"),
        MethodSpec("ihosvd"),
        MethodSpec("ihooi"),
    ]
    return ExperimentConfig(sim, methods, replicates=replicates, seed=seed, cluster=True, setting="sbm", threads=threads)


def lambda_config(replicates=20, seed=0, threads=None):
    return ExperimentConfig(
        two_factor_spec(), [MethodSpec("jisst")], replicates=replicates, seed=seed, setting="lambda", threads=threads
    )


def table1_rows(report: EvalReport) -> list[list[str]]:
    """Mean(s.d.) ARI per method (columns) and clustering target (rows)."""
    out = []
    for label, metric in TABLE1_ROWS:
        row = [label]
        for method in TABLE1_HEADER[1:]:
            v = report.values(method, metric)
            if v.size == 0:
                row.append("NA")
                continue
            sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
            row.append(f"{float(v.mean()):.3g}({sd:.2g})")
        out.append(row)
    return out


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return "%.6g" % x


def _error_summary(report, path, factors):
    header = ["setting", "method", "snr"] + list(factors)
    rows = []
    keys = sorted({(r["setting"], r["method"], r["snr"]) for r in report.rows})
    for setting, method, snr in keys:
        rows.append(
            [setting, method, _fmt(snr)]
            + [_fmt(report.mean(method, f"sin_{f}", snr=snr, setting=setting)) for f in factors]
        )
    _write_rows(path, header, rows)


def _plot_vs_snr(report, out: Path, stem, factors):
    for setting in sorted({r["setting"] for r in report.rows}):
        methods = sorted({r["method"] for r in report.rows if r["setting"] == setting})
        for f in factors:
            series, errs = {}, {}
            for m in methods:
                snrs = sorted({r["snr"] for r in report.rows if r["setting"] == setting and r["method"] == m})
                vals = [report.values(m, f"sin_{f}", snr=s, setting=setting) for s in snrs]
                series[m] = (1.0 / np.array(snrs), [v.mean() for v in vals])
                errs[m] = [1.96 * v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.0 for v in vals]
            line_plot(
                out / f"{stem}_{setting}_{f}.svg",
                series,
                title=f"{setting}: sin-theta error of {f}",
                xlabel="1 / SNR",
                ylabel="mean error",
                errors=errs,
            )


def _plot_iterations(report, out: Path):
    for setting in sorted({r["setting"] for r in report.rows}):
        snrs = sorted({r["snr"] for r in report.rows if r["setting"] == setting})
        series = {}
        for f in "uVW":
            for s in snrs:
                ts = list(range(1, 11))
                vals = [report.values(None, f"sin_{f}1@{t}", snr=s, setting=setting).mean() for t in ts]
                series[f"{f}, SNR {s:g}"] = (ts, vals)
        line_plot(
            out / f"fig1_{setting}_iterations.svg",
            series,
            title=f"{setting}: error by iteration",
            xlabel="iteration",
            ylabel="mean sin-theta error",
        )


def run_benchmark(name, out_dir, replicates=None, seed=0, threads=None, plots=True) -> EvalReport:
    """Run a preset and write its CSV files (and SVG plots unless ``plots`` is false)."""
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kw = dict(seed=seed, threads=threads)
    if replicates is not None:
        kw["replicates"] = replicates
    if name == "fig1":
        report = _run_all(fig1_configs(**kw))
        report.to_csv(out / "fig1.csv")
        _error_summary(report, out / "fig1_summary.csv", ["u1", "V1", "W1"])
        if plots:
            _plot_vs_snr(report, out, "fig1", ["u1", "V1", "W1"])
            _plot_iterations(report, out)
    elif name == "fig2":
        report = _run_all(fig2_configs(**kw))
        report.to_csv(out / "fig2.csv")
        factors = ["u1", "V1", "W1", "u2", "V2", "W2"]
        _error_summary(report, out / "fig2_summary.csv", factors)
        if plots:
            _plot_vs_snr(report, out, "fig2", factors)
    elif name == "table1":
        report = run_experiment(table1_config(**kw))
        report.to_csv(out / "table1_long.csv")
        _write_rows(out / "table1.csv", TABLE1_HEADER, table1_rows(report))
    else:
        report = lambda_sweep(lambda_config(**kw), LAMBDA_GRID)
        report.to_csv(out / "lambda.csv")
        factors = ["u1", "V1", "W1", "u2", "V2", "W2"]
        rows = [
            [_fmt(lam)] + [_fmt(report.mean("JisstPCA", f"sin_{f}", lam=lam)) for f in factors]
            for lam in LAMBDA_GRID
        ]
        _write_rows(out / "lambda_summary.csv", ["lam"] + factors, rows)
        if plots:
            mk = report.metadata["lambda_markers"]
            series = {
                f: (LAMBDA_GRID, [report.mean("JisstPCA", f"sin_{f}", lam=lam) for lam in LAMBDA_GRID])
                for f in factors
            }
            line_plot(
                out / "lambda.svg",
                series,
                title="error against the modality weight",
                xlabel="lambda",
                ylabel="mean sin-theta error",
                vlines={"oracle": mk["oracle"], "surrogate": mk["surrogate"]},
            )
    report.to_json(out / f"{name}_summary.json")
    return report


def _run_all(configs) -> EvalReport:
    report = None
    for cfg in configs:
        r = run_experiment(cfg)
        report = r if report is None else report.merge(r)
    return report
