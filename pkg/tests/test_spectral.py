import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import max_principal_angle, random_connected_graph
from jane.errors import KTooLarge, NotConnected, TooLarge
from jane.graph import build_graph, laplacian
from jane.spectral import dense_eig_oracle, embedding_energy, smallest_nontrivial_eigs, symmetric_eig

K4 = [(i, j) for i in range(4) for j in range(i + 1, 4)]
P3 = [(0, 1), (1, 2)]
S4 = [(0, 1), (0, 2), (0, 3)]


def check_basis(basis, lap):
    V, lam = basis.eigenvectors, basis.eigenvalues
    assert np.allclose(np.linalg.norm(V, axis=0), 1.0, atol=1e-10)
    assert np.all(np.abs(V.sum(axis=0)) <= 1e-8)
    for j in range(basis.k):
        resid = np.linalg.norm(lap.L @ V[:, j] - lam[j] * V[:, j])
        assert resid <= 1e-6 * max(1.0, lam[j])
    assert np.all(np.diff(lam) >= -1e-12)


@pytest.mark.parametrize("edges,n,k,expected", [
    (K4, 4, 2, [4.0, 4.0]),
    (P3, 3, 2, [4 * math.sin(math.pi / 6) ** 2, 4 * math.sin(2 * math.pi / 6) ** 2]),
    (S4, 4, 1, [1.0]),
])
def test_known_spectra(edges, n, k, expected):
    lap = laplacian(build_graph(edges, n))
    basis = smallest_nontrivial_eigs(lap, k)
    assert np.allclose(basis.eigenvalues, expected, atol=1e-12)
    check_basis(basis, lap)


def test_star_matches_dense_oracle():
    lap = laplacian(build_graph(S4, 4))
    w, _ = dense_eig_oracle(lap)
    assert smallest_nontrivial_eigs(lap, 1).eigenvalues[0] == pytest.approx(w[1], abs=1e-12)


def test_sign_convention_and_fiedler_vector():
    basis = smallest_nontrivial_eigs(laplacian(build_graph(P3, 3)), 1)
    v = basis.eigenvectors[:, 0]
    assert np.allclose(v, np.array([1.0, 0.0, -1.0]) / math.sqrt(2), atol=1e-12)


def test_errors():
    lap = laplacian(build_graph(P3, 3))
    with pytest.raises(KTooLarge):
        smallest_nontrivial_eigs(lap, 3)
    disc = laplacian(build_graph([(0, 1), (2, 3)], 4, warn=False))
    with pytest.raises(NotConnected):
        smallest_nontrivial_eigs(disc, 1)
    big = laplacian(build_graph([(i, i + 1) for i in range(2000)], 2001))
    with pytest.raises(TooLarge):
        dense_eig_oracle(big)


def test_embedding_energy_examples():
    lap = laplacian(build_graph(P3, 3))
    U = smallest_nontrivial_eigs(lap, 2).eigenvectors
    assert embedding_energy(U, lap) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ValueError):
        embedding_energy(np.ones((3, 1)), lap)
    rng = np.random.default_rng(0)
    lapk = laplacian(build_graph(K4, 4))
    for _ in range(20):
        u = rng.standard_normal((4, 1))
        u -= u.mean()
        u /= np.linalg.norm(u)
        assert embedding_energy(u, lapk) >= 4.0 - 1e-12


def test_dense_oracle_small_spectra():
    w, _ = dense_eig_oracle(laplacian(build_graph([(0, 1), (1, 2), (0, 2)], 3)))
    assert np.allclose(w, [0, 3, 3], atol=1e-12)
    w, _ = dense_eig_oracle(laplacian(build_graph([(0, 1)], 2)))
    assert np.allclose(w, [0, 2], atol=1e-12)


def test_oracle_self_consistency_gnp():
    rng = np.random.default_rng(5)
    lap = laplacian(random_connected_graph(10, 0.5, rng))
    w, _ = dense_eig_oracle(lap)
    basis = smallest_nontrivial_eigs(lap, 9)
    assert np.allclose(basis.eigenvalues, w[1:], atol=1e-8)


def test_tql2_matches_numpy_on_random_symmetric():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((25, 25))
    A = A + A.T
    w, V = symmetric_eig(A)
    assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
    assert np.allclose(A @ V, V * w, atol=1e-10)
    assert np.allclose(V.T @ V, np.eye(25), atol=1e-12)


def test_lanczos_agrees_with_dense_path():
    rng = np.random.default_rng(3)
    g = random_connected_graph(300, 0.02, rng)
    lap = laplacian(g)
    dense = smallest_nontrivial_eigs(lap, 4, method="dense")
    lanc = smallest_nontrivial_eigs(lap, 4, method="lanczos")
    assert np.allclose(dense.eigenvalues, lanc.eigenvalues, atol=1e-8)
    assert max_principal_angle(dense.eigenvectors, lanc.eigenvectors) <= 1e-6
    check_basis(lanc, lap)


def test_lanczos_path_used_above_dense_limit():
    rng = np.random.default_rng(4)
    # a long cycle has eigenvalue pairs; the subspace is still well defined
    n = 700
    edges = [(i, (i + 1) % n) for i in range(n)] + [(int(a), int(b)) for a, b in rng.integers(0, n, (200, 2)) if a != b]
    lap = laplacian(build_graph(edges, n))
    basis = smallest_nontrivial_eigs(lap, 3)
    w, V = dense_eig_oracle(lap)
    assert np.allclose(basis.eigenvalues, w[1:4], atol=1e-8)
    check_basis(basis, lap)


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 40), st.floats(0.05, 0.6), st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_minimality_property(n, p, seed, k):
    rng = np.random.default_rng(seed)
    lap = laplacian(random_connected_graph(n, p, rng))
    k = min(k, n - 1)
    U = smallest_nontrivial_eigs(lap, k).eigenvectors
    best = embedding_energy(U, lap)
    # random orthonormal, centred competitors
    Z = rng.standard_normal((n, k))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    assert embedding_energy(Q, lap) >= best - 1e-9
    # random centred unit columns (not orthogonal), compared column by column
    z = rng.standard_normal(n)
    z -= z.mean()
    z /= np.linalg.norm(z)
    assert embedding_energy(z[:, None], lap) >= embedding_energy(U[:, :1], lap) - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 50), st.floats(0.05, 0.6), st.integers(0, 2**32 - 1))
def test_basis_invariants_property(n, p, seed):
    rng = np.random.default_rng(seed)
    lap = laplacian(random_connected_graph(n, p, rng))
    k = int(rng.integers(1, min(6, n - 1) + 1))
    check_basis(smallest_nontrivial_eigs(lap, k), lap)
