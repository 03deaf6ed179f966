"""Acceptance criteria, one test each.

Every test prints a single ``[ACCEPT] Cn PASS|FAIL ...`` line; the lines are
repeated in the terminal summary so they survive output capture.
"""

import time

import numpy as np

import oracles
from conftest import random_semisym
from jisstpca.baselines import ihooi
from jisstpca.bench import LAMBDA_GRID, fig1_configs, lambda_config, table1_config, two_factor_spec
from jisstpca.evaluate import ExperimentConfig, MethodSpec, lambda_sweep, run_experiment
from jisstpca.multifactor import fit_multifactor
from jisstpca.power import FitOptions, fit_single, fit_single_generalized, fit_single_matrix_tensor
from jisstpca.selection import select_rank_single
from jisstpca.linalg import sin_theta_subspace, sin_theta_vec
from jisstpca.simgen import SimSpec, generate

RESULTS = []
MAX_FAILURE_RATE = 0.05


def record(tag, ok, detail):
    line = f"[ACCEPT] {tag} {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _failure_ok(report):
    return report.failure_rate() <= MAX_FAILURE_RATE


def test_c1_noiseless_exact_recovery():
    X, Y, truth = generate(SimSpec(p=30, q=30, N=40, ranks_x=[3], ranks_y=[2], sigma=0.0, seed=1))
    t0 = time.perf_counter()
    f, trace = fit_single(X, Y, FitOptions(r_x=3, r_y=2))
    elapsed = time.perf_counter() - t0
    t = truth.stack[0]
    errs = [
        sin_theta_vec(trace.u_at(2), t.u),
        sin_theta_subspace(trace.V_at(2), t.V),
        sin_theta_subspace(trace.W_at(2), t.W),
    ]
    rel = max(abs(f.scale_x - t.scale_x) / t.scale_x, abs(f.scale_y - t.scale_y) / t.scale_y)
    ok = max(errs) <= 1e-8 and rel <= 1e-8 and elapsed < 1.0
    record("C1", ok, f"max sin-theta at iter 2 {max(errs):.2e}, scale rel err {rel:.2e}, {elapsed:.3f}s")


def test_c2_one_step_convergence():
    cfg = fig1_configs(replicates=20)[0]
    cfg.snr_grid = [2.25]
    cfg.methods = [MethodSpec("jisst", lam=0.5, iterations=(1, 2, 10), tol=1e-12)]
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    m = lambda k: report.mean("JisstPCA", k)
    gaps = {
        "u@1": abs(m("sin_u1@1") - m("sin_u1@10")) / m("sin_u1@10"),
        "V@2": abs(m("sin_V1@2") - m("sin_V1@10")) / m("sin_V1@10"),
        "W@2": abs(m("sin_W1@2") - m("sin_W1@10")) / m("sin_W1@10"),
    }
    ok = max(gaps.values()) <= 0.05 and elapsed < 60 and _failure_ok(report)
    detail = ", ".join(f"{k} rel gap {v:.4f}" for k, v in gaps.items())
    record("C2", ok, f"{detail}, {elapsed:.1f}s")


def _r2(x, y):
    x, y = np.asarray(x), np.asarray(y)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return 1.0 - resid @ resid / np.sum((y - y.mean()) ** 2)


def test_c3_inverse_snr_scaling():
    snrs = [3.0, 6.0, 12.0, 24.0]
    t0 = time.perf_counter()
    r2 = {}
    ok = True
    for cfg in fig1_configs(replicates=20):
        cfg.snr_grid = snrs
        cfg.methods = [MethodSpec(cfg.methods[0].kind, lam=0.5)]
        report = run_experiment(cfg)
        ok &= _failure_ok(report)
        name = cfg.methods[0].name
        for f in ("u1", "V1", "W1"):
            means = [report.mean(name, f"sin_{f}", snr=s) for s in snrs]
            r2[f"{name}:{f}"] = _r2(1.0 / np.array(snrs), means)
    elapsed = time.perf_counter() - t0
    ok = ok and min(r2.values()) >= 0.95 and elapsed < 300
    record("C3", ok, f"min R^2 {min(r2.values()):.5f} ({min(r2, key=r2.get)}), {elapsed:.1f}s")


def test_c4_comparative_dominance():
    cfg = ExperimentConfig(two_factor_spec(), [MethodSpec("jisst"), MethodSpec("ihooi")], replicates=10, snr_grid=[8.0])
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    factors = ["u1", "V1", "W1", "u2", "V2", "W2"]
    jis = {f: report.mean("JisstPCA", f"sin_{f}") for f in factors}
    hooi = {f: report.mean("iHOOI", f"sin_{f}") for f in factors}
    ok = (
        max(jis.values()) <= 0.2
        and jis["V2"] < hooi["V2"]
        and jis["W2"] < hooi["W2"]
        and elapsed < 600
        and _failure_ok(report)
    )
    detail = (
        f"JisstPCA max {max(jis.values()):.3f}; V2 {jis['V2']:.3f} vs iHOOI {hooi['V2']:.3f}; "
        f"W2 {jis['W2']:.3f} vs iHOOI {hooi['W2']:.3f}"
    )
    record("C4", ok, f"{detail}, {elapsed:.1f}s")


def test_c5_sbm_clustering():
    cfg = table1_config(replicates=20)
    assert all(m.r_max == (5, 5) for m in cfg.methods if m.rank_mode == "bic")
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    rows = ["ari_samples", "ari_x1", "ari_x2", "ari_y1", "ari_y2"]
    ours = min(report.mean(m, r) for m in ("JisstPCA", "G-JisstPCA") for r in rows)
    theirs = max(report.mean(m, r) for m in ("iHOSVD", "iHOOI") for r in ("ari_x2", "ari_y2"))
    ok = ours >= 0.95 and theirs <= 0.4 and elapsed < 600 and _failure_ok(report)
    record("C5", ok, f"min JisstPCA/G-JisstPCA ARI {ours:.3f}, max baseline Network 2 ARI {theirs:.3f}, {elapsed:.1f}s")


def test_c6_bic_rank_recovery():
    base = fig1_configs()[0].sim.with_(snr=8.0)
    hits = 0
    for rep in range(20):
        X, Y, _ = generate(base.with_(seed=0, replicate=rep))
        rx, ry, _, _ = select_rank_single(X, Y, 5, 5, opts=FitOptions(lam=0.5))
        hits += (rx, ry) == (3, 2)
    record("C6", hits >= 18, f"true ranks (3, 2) selected in {hits}/20 (threshold 18/20)")


def test_c7_oracle_step_equivalence():
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        X, Y = random_semisym(rng, 4, 5), random_semisym(rng, 4, 5)
        Xa, Ya = oracles.to_ppn(X), oracles.to_ppn(Y)
        lam = 0.3 + 0.1 * seed
        u0 = rng.standard_normal(5)
        u0 /= np.linalg.norm(u0)
        opts = FitOptions(r_x=2, r_y=1, lam=lam, t_max=1, init=u0)

        _, tr = fit_single(X, Y, opts)
        V, W, u1 = oracles.alg1_step(Xa, Ya, u0, 2, 1, lam)
        worst = max(worst, _gap(tr.V[0], V), _gap(tr.W[0], W), np.abs(tr.u[1] - u1).max())

        _, tr = fit_single_generalized(X, Y, opts)
        V, W, Dx, Dy, u1 = oracles.alg5_step(Xa, Ya, u0, 2, 1, lam)
        worst = max(worst, _gap(tr.V[0], V), _gap(tr.W[0], W), np.abs(tr.u[1] - u1).max())

        M = rng.standard_normal((3, 5))
        _, tr = fit_single_matrix_tensor(X, M, opts)
        V, w, u1 = oracles.alg4_step(Xa, M, u0, 2, lam)
        worst = max(worst, _gap(tr.V[0], V), np.abs(tr.W[0][:, 0] - w).max(), np.abs(tr.u[1] - u1).max())

        fit = ihooi(X, Y, [1, 1], [1, 1], k_max=1)
        V, W, U = oracles.alg7_step(Xa, Ya, 2, 2, 2)
        worst = max(worst, _gap(fit.V, V), _gap(fit.W, W), _gap(fit.U, U))
    record("C7", worst <= 1e-10, f"max elementwise gap over 5 seeds x 4 algorithms {worst:.2e}")


def _gap(A, B):
    # bases are unique only up to rotation, so compare projectors
    return np.abs(oracles.proj(A) - oracles.proj(B)).max()


def test_c8_orthogonality_invariants():
    worst_u, worst_v = 0.0, 0.0
    for scheme in ("partial-u", "project"):
        for rep in range(50):
            spec = SimSpec(p=12, q=10, N=15, K=3, ranks_x=[2, 2, 2], ranks_y=[2, 1, 1], snr=2.0, seed=11, replicate=rep)
            X, Y, _ = generate(spec)
            stack = fit_multifactor(X, Y, 3, [2, 2, 2], [2, 1, 1], deflation=scheme)
            U = np.column_stack([f.u for f in stack])
            worst_u = max(worst_u, np.abs(U.T @ U - np.eye(3)).max())
            if scheme == "project":
                for i in range(3):
                    for j in range(i + 1, 3):
                        worst_v = max(worst_v, np.abs(stack[i].V.T @ stack[j].V).max())
    ok = worst_u <= 1e-10 and worst_v <= 1e-10
    record("C8", ok, f"max |u_i'u_j| {worst_u:.2e}, max |V_i'V_j| {worst_v:.2e} over 50 instances per scheme")


def test_c9_lambda_insensitivity():
    report = lambda_sweep(lambda_config(replicates=20), LAMBDA_GRID)
    ratios = {}
    for f in ("u1", "V1", "W1", "u2", "V2", "W2"):
        means = [report.mean("JisstPCA", f"sin_{f}", lam=lam) for lam in LAMBDA_GRID]
        ratios[f] = max(means) / min(means)
    worst = max(ratios, key=ratios.get)
    ok = ratios[worst] <= 1.5 and _failure_ok(report)
    record("C9", ok, f"max/min mean-error ratio {ratios[worst]:.3f} ({worst}) over lambda {LAMBDA_GRID[0]}..{LAMBDA_GRID[-1]}")
