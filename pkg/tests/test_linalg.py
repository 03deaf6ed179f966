import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_basis, unit
from jisstpca.linalg import (
    DegenerateSpectrumWarning,
    adjusted_rand_index,
    apply_sign_convention,
    kmeans,
    sin_theta_subspace,
    sin_theta_vec,
    top_left_singular_vector,
    top_r_symmetric,
    within_cluster_ss,
)


def _rotation(rng, r):
    Q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    return Q


def test_top_r_diagonal():
    V, w = top_r_symmetric(np.diag([3.0, -5.0, 1.0]), 2)
    np.testing.assert_allclose(w, [-5, 3])
    np.testing.assert_allclose(V, np.eye(3)[:, [1, 0]])


def test_top_r_identity():
    with pytest.warns(DegenerateSpectrumWarning):
        V, w = top_r_symmetric(np.eye(4), 2)
    np.testing.assert_allclose(w, [1, 1])
    np.testing.assert_allclose(V.T @ V, np.eye(2), atol=1e-12)


def test_top_r_random_against_full(rng):
    G = rng.standard_normal((6, 6))
    A = G + G.T
    V, w = top_r_symmetric(A, 3)
    assert np.abs(A @ V - V * w).max() <= 1e-10
    assert np.abs(V.T @ V - np.eye(3)).max() <= 1e-10
    full_w, full_V = np.linalg.eig(A)
    order = np.argsort(-np.abs(full_w))[:3]
    np.testing.assert_allclose(w, full_w[order].real, atol=1e-10)
    assert sin_theta_subspace(V, full_V[:, order].real) <= 1e-10


def test_top_r_rejects():
    with pytest.raises(ValueError):
        top_r_symmetric(np.eye(3), 4)
    with pytest.raises(ValueError):
        top_r_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_subspace_iteration_path(rng, monkeypatch):
    import jisstpca.linalg as la

    G = rng.standard_normal((40, 40))
    A = G + G.T
    V0, w0 = top_r_symmetric(A, 3)
    monkeypatch.setattr(la, "DENSE_EIG_MAX", 10)
    V1, w1 = top_r_symmetric(A, 3)
    np.testing.assert_allclose(w1, w0, rtol=1e-10)
    assert sin_theta_subspace(V0, V1) <= 1e-8


def test_sign_convention_ties():
    B = np.array([[-1.0, 0.5], [1.0, -0.5], [0.2, 0.1]])
    out = apply_sign_convention(B)
    np.testing.assert_array_equal(out[:, 0], [1.0, -1.0, -0.2])
    np.testing.assert_array_equal(out[:, 1], [0.5, -0.5, 0.1])


def test_top_singular_vector(rng):
    v = rng.standard_normal(7)
    M = np.outer(np.eye(4)[0], v)
    np.testing.assert_allclose(top_left_singular_vector(M), np.eye(4)[0], atol=1e-12)
    M = rng.standard_normal((5, 8))
    u = top_left_singular_vector(M)
    w, S = np.linalg.eigh(M @ M.T)
    assert sin_theta_vec(u, S[:, -1]) <= 1e-10
    with pytest.raises(ValueError):
        top_left_singular_vector(np.zeros((3, 3)))


def test_top_singular_vector_degenerate_flagged():
    M = np.hstack([np.eye(3), np.zeros((3, 2))])
    with pytest.warns(DegenerateSpectrumWarning):
        u = top_left_singular_vector(M)
    assert np.linalg.norm(u) == pytest.approx(1.0)


def test_sin_theta_vec_examples(rng):
    u = unit(rng, 5)
    assert sin_theta_vec(u, u) <= 1e-15
    assert sin_theta_vec(np.eye(3)[0], np.eye(3)[1]) == 1
    assert sin_theta_vec(np.array([1.0, 0]), np.array([1, 1]) / np.sqrt(2)) == pytest.approx(np.sqrt(2) / 2)
    with pytest.raises(ValueError):
        sin_theta_vec(2 * u, u)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_sin_theta_vec_matches_definition_and_sign(seed):
    rng = np.random.default_rng(seed)
    u, v = unit(rng, 6), unit(rng, 6)
    s = sin_theta_vec(u, v)
    assert s == pytest.approx(np.sqrt(1 - (u @ v) ** 2), abs=1e-12)
    assert sin_theta_vec(-u, v) == pytest.approx(s, abs=1e-15)


def test_sin_theta_subspace_examples(rng):
    V = random_basis(rng, 6, 2)
    assert sin_theta_subspace(V, V @ _rotation(rng, 2)) <= 1e-12
    assert sin_theta_subspace(np.eye(4)[:, :2], np.eye(4)[:, 2:]) == pytest.approx(1.0)
    W = random_basis(rng, 6, 2)
    s = np.linalg.svd(V.T @ W, compute_uv=False)
    assert sin_theta_subspace(V, W) == pytest.approx(np.sqrt(1 - s.min() ** 2), abs=1e-12)
    assert sin_theta_subspace(V, W, "frobenius") == pytest.approx(np.sqrt(2 - np.sum(s**2)), abs=1e-12)
    with pytest.raises(ValueError):
        sin_theta_subspace(V, random_basis(rng, 6, 3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_sin_theta_subspace_rotation_invariance(seed, r):
    rng = np.random.default_rng(seed)
    V, W = random_basis(rng, 7, r), random_basis(rng, 7, r)
    base = sin_theta_subspace(V, W)
    assert sin_theta_subspace(V @ _rotation(rng, r), W) == pytest.approx(base, abs=1e-10)
    assert sin_theta_subspace(V, W @ _rotation(rng, r)) == pytest.approx(base, abs=1e-10)
    assert 0 <= base <= 1


def test_kmeans_separated_and_trivial(rng):
    a = rng.normal(0, 0.1, (20, 2))
    b = rng.normal(5, 0.1, (20, 2))
    lab = kmeans(np.vstack([a, b]), 2, seed=1)
    assert adjusted_rand_index(lab, [0] * 20 + [1] * 20) == 1.0
    assert not np.any(kmeans(a, 1))
    with pytest.raises(ValueError):
        kmeans(a[:2], 3)


def test_kmeans_matches_brute_force():
    pts = np.array(
        [[0, 0], [0, 1], [1, 0], [1, 1], [4, 4], [4, 5], [5, 4], [5, 5.5]], dtype=float
    )
    best = np.inf
    for bits in itertools.product([0, 1], repeat=len(pts) - 1):
        lab = np.array((0,) + bits)
        if len(set(lab)) < 2:
            continue
        best = min(best, within_cluster_ss(pts, lab))
    lab = kmeans(pts, 2, seed=3)
    assert within_cluster_ss(pts, lab) == pytest.approx(best)


def test_kmeans_reproducible(rng):
    pts = rng.standard_normal((50, 3))
    assert np.array_equal(kmeans(pts, 4, seed=9), kmeans(pts, 4, seed=9))


def _pair_count_ari(a, b):
    n = len(a)
    pairs = list(itertools.combinations(range(n), 2))
    both = sum(a[i] == a[j] and b[i] == b[j] for i, j in pairs)
    same_a = sum(a[i] == a[j] for i, j in pairs)
    same_b = sum(b[i] == b[j] for i, j in pairs)
    expected = same_a * same_b / len(pairs)
    return (both - expected) / (0.5 * (same_a + same_b) - expected)


def test_ari_examples():
    a = [1, 1, 1, 2]
    b = [1, 2, 2, 2]
    assert adjusted_rand_index(a, a) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1, 2], [5, 5, 3, 3, 9]) == 1.0
    assert adjusted_rand_index(a, b) == pytest.approx(-1 / 3)
    assert adjusted_rand_index(a, b) == pytest.approx(_pair_count_ari(a, b))
    with pytest.raises(ValueError):
        adjusted_rand_index([1, 2], [1, 2, 3])


def test_ari_random_labels_average_zero(rng):
    truth = rng.integers(0, 3, 100)
    vals = [adjusted_rand_index(truth, rng.integers(0, 3, 100)) for _ in range(1000)]
    assert abs(np.mean(vals)) <= 0.05
