import numpy as np
import pytest

from conftest import random_basis, unit
from jisstpca import evaluate
from jisstpca.evaluate import (
    EvalReport,
    ExperimentConfig,
    MethodSpec,
    cluster_eval,
    factor_errors,
    lambda_sweep,
    match_factors,
    run_experiment,
    subspace_error,
    vector_error,
)
from jisstpca.power import FitError
from jisstpca.simgen import SimSpec, generate


def test_method_spec_defaults():
    assert MethodSpec("g-jisst").name == "G-JisstPCA"
    assert MethodSpec("ihooi").name == "iHOOI"
    with pytest.raises(ValueError):
        MethodSpec("pca")
    with pytest.raises(ValueError):
        MethodSpec(rank_mode="guess")


def test_config_validation():
    sim = SimSpec(p=6, q=6, N=8)
    with pytest.raises(ValueError):
        ExperimentConfig(sim, [MethodSpec()], replicates=0)
    with pytest.raises(ValueError):
        ExperimentConfig(sim, [])
    with pytest.raises(ValueError):
        ExperimentConfig(sim, [MethodSpec()], lambda_grid=[0.0])
    cfg = ExperimentConfig(sim, [{"kind": "ihosvd"}])
    assert cfg.methods[0].name == "iHOSVD"


def test_error_helpers(rng):
    V = random_basis(rng, 8, 3)
    assert subspace_error(V, V) <= 1e-15
    assert subspace_error(V[:, :2], V) == pytest.approx(1.0)
    assert subspace_error(V[:, :2], V, "fro") == pytest.approx(1.0)
    assert subspace_error(V, V[:, :2]) <= 1e-15
    u = unit(rng, 8)
    assert vector_error(-u, u) <= 1e-15
    e = np.eye(8)
    assert vector_error(e[0], e[1]) == 1.0


def test_match_factors(rng):
    a, b, c = unit(rng, 10), unit(rng, 10), unit(rng, 10)
    assert match_factors([b, a], [a, b]) == [1, 0]
    assert match_factors([a], [a, b]) == [0, None]
    assert match_factors([], [a]) == [None]
    assert match_factors([c, -a, b], [a, b]) == [1, 2]


def test_noiseless_errors_vanish():
    cfg = ExperimentConfig(
        SimSpec(p=20, q=20, N=25, sigma=0.0),
        [MethodSpec("jisst", lam=0.5), MethodSpec("ihooi")],
        replicates=1,
        threads=1,
    )
    report = run_experiment(cfg)
    for method in ("JisstPCA", "iHOOI"):
        for f in ("u1", "V1", "W1"):
            assert report.values(method, f"sin_{f}").max() <= 1e-8
    assert report.metadata["attempted"] == {"JisstPCA": 1, "iHOOI": 1}


def test_errors_sign_invariant():
    X, Y, truth = generate(SimSpec(p=10, q=10, N=12, seed=4))
    f = truth.stack[0]
    a = factor_errors([(f.u, f.V, f.W)], truth)
    b = factor_errors([(-f.u, -f.V, -f.W)], truth)
    assert a == b
    assert a["sin_u1"] <= 1e-15


def test_missing_factor_scores_one():
    _, _, truth = generate(SimSpec(p=10, q=10, N=12, K=2, ranks_x=[2, 1], ranks_y=[1, 1]))
    f = truth.stack[0]
    e = factor_errors([(f.u, f.V, f.W)], truth)
    assert e["sin_u2"] == e["sin_V2"] == e["sin_W2"] == 1.0


def test_cluster_eval():
    _, _, truth = generate(SimSpec(model="sbm", p=30, q=20, N=20, seed=2))
    perfect = cluster_eval(truth.stack, truth)
    assert all(v == pytest.approx(1.0) for v in perfect.values())
    assert set(perfect) == {"ari_samples", "ari_x1", "ari_x2", "ari_y1", "ari_y2"}
    rng = np.random.default_rng(0)
    scores = []
    for _ in range(40):
        layers = [(rng.standard_normal(20), rng.standard_normal((30, 2)), rng.standard_normal((20, 2)))
                  for _ in range(2)]
        scores.append(cluster_eval(layers, truth)["ari_x1"])
    assert abs(np.mean(scores)) < 0.05
    _, _, plain = generate(SimSpec(p=6, q=6, N=8))
    with pytest.raises(ValueError):
        cluster_eval([(f.u, f.V, f.W) for f in plain.stack], plain)


def _small_cfg(**kw):
    base = dict(replicates=2, snr_grid=[4.0, 8.0], threads=2, setting="s")
    base.update(kw)
    return ExperimentConfig(SimSpec(p=12, q=10, N=15), [MethodSpec("jisst"), MethodSpec("ihosvd")], **base)


def test_csv_round_trip(tmp_path):
    report = run_experiment(_small_cfg())
    path = tmp_path / "r.csv"
    report.to_csv(path)
    first = path.read_text().splitlines()[0]
    assert first.startswith("# jisstpca")
    back = EvalReport.from_csv(path)
    assert len(back.rows) == len(report.rows)
    for a, b in zip(report.rows, back.rows):
        assert a == b


def test_threads_do_not_change_results():
    a = run_experiment(_small_cfg(threads=1))
    b = run_experiment(_small_cfg(threads=4))
    assert a.rows == b.rows


def test_aggregate_and_summary():
    report = run_experiment(_small_cfg())
    agg = report.aggregate()
    row = next(r for r in agg if r["method"] == "JisstPCA" and r["metric"] == "sin_u1" and r["snr"] == 8.0)
    v = report.values("JisstPCA", "sin_u1", snr=8.0)
    assert row["n"] == 2
    assert row["mean"] == pytest.approx(v.mean())
    assert row["half_width"] == pytest.approx(1.96 * v.std(ddof=1) / np.sqrt(2))
    assert report.mean("JisstPCA", "sin_u1", snr=4.0) >= report.mean("JisstPCA", "sin_u1", snr=8.0) * 0.5
    assert report.failure_rate() == 0.0


def test_lambda_sweep_single_value():
    cfg = _small_cfg(snr_grid=[6.0])
    report = lambda_sweep(cfg, [0.3])
    assert {r["lam"] for r in report.rows} == {0.3}
    mk = report.metadata["lambda_markers"]
    assert 0 < mk["oracle"] < 1 and 0 < mk["surrogate"] < 1


def test_failures_recorded(monkeypatch):
    real = evaluate.run_method

    def flaky(m, X, Y, truth, lam):
        if m.kind == "jisst" and truth.stack[0].u[0] > 0:
            raise FitError("synthetic failure")
        return real(m, X, Y, truth, lam)

    monkeypatch.setattr(evaluate, "run_method", flaky)
    report = run_experiment(_small_cfg(replicates=6, snr_grid=[5.0], threads=1))
    n_fail = len(report.failures)
    assert 0 < n_fail < 6
    assert all("synthetic failure" in f["cause"] for f in report.failures)
    assert report.failure_rate("JisstPCA") == pytest.approx(n_fail / 6)
    assert report.values("JisstPCA", "sin_u1").size == 6 - n_fail
    assert report.failure_rate("iHOSVD") == 0.0
