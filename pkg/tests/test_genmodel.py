import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.linear_model import LogisticRegression

from helpers import brute_loglik, random_graph
from jane.errors import InvalidConfig, InvalidFraction, NonPositiveScale, ShapeMismatch
from jane.genmodel import (UNKNOWN, Dataset, LatentState, SynthConfig, edge_prob, generate_synthetic,
                           informative_split, log_likelihood_adjacency, make_splits, sample_graph,
                           surrogate_adjacency_nll)
from jane.graph import build_graph


def test_edge_prob_examples():
    assert edge_prob([0.3, -1.0], [0.3, -1.0], 2.0) == 1.0
    assert edge_prob([0.0, 0.0], [1.0, 1.0], 2.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert edge_prob([1, 2], [2, 4], 1.0) == pytest.approx(math.exp(-5), rel=1e-14)
    with pytest.raises(NonPositiveScale):
        edge_prob([0], [1], 0.0)
    with pytest.raises(ShapeMismatch):
        edge_prob([0, 1], [1], 1.0)


def test_latent_state_validation():
    with pytest.raises(NonPositiveScale):
        LatentState(np.zeros((3, 2)), -1.0)
    with pytest.raises(NonPositiveScale):
        LatentState(np.zeros((3, 2)), math.inf)
    with pytest.raises(ValueError):
        LatentState(np.array([[0.0, math.nan]]), 1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.floats(1e-3, 1e3))
def test_edge_prob_symmetric_and_in_range(a, b, s2):
    p = edge_prob(a, b, s2)
    assert p == edge_prob(b, a, s2)
    assert 0.0 <= p <= 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(1e-6, 20.0), st.floats(0.1, 10.0))
def test_edge_prob_strictly_decreasing(r, dr, s2):
    p1 = edge_prob([0.0], [math.sqrt(r)], s2)
    p2 = edge_prob([0.0], [math.sqrt(r + dr)], s2)
    if p1 > 0.0:  # both underflow to zero far out
        assert p2 < p1


def test_sample_graph_identical_points_give_complete_graph():
    g = sample_graph(LatentState(np.ones((7, 2)), 1.0), np.random.default_rng(0))
    assert g.num_edges == 21


def test_sample_graph_tiny_scale_gives_empty_graph():
    U = np.arange(20, dtype=float).reshape(10, 2)
    g = sample_graph(LatentState(U, 1e-6), np.random.default_rng(0), warn=False)
    assert g.num_edges == 0


def test_sample_graph_determinism():
    U = np.random.default_rng(1).standard_normal((40, 2))
    a = sample_graph(LatentState(U, 1.0), np.random.default_rng(9), warn=False)
    b = sample_graph(LatentState(U, 1.0), np.random.default_rng(9), warn=False)
    assert a == b


def test_sample_graph_density_monte_carlo():
    # two tight clusters 10 units apart: within-cluster density must match the
    # analytic mean edge probability within 3 standard errors over 200 seeds
    rng = np.random.default_rng(123)
    n = 50
    centers = np.where(np.arange(n)[:, None] < 25, 0.0, 10.0) * np.array([[1.0, 0.0]])
    U = centers + 0.3 * rng.standard_normal((n, 2))
    same = (np.arange(n)[:, None] < 25) == (np.arange(n)[None, :] < 25)
    iu = np.triu_indices(n, 1)
    mask = same[iu]
    d2 = ((U[:, None, :] - U[None, :, :]) ** 2).sum(-1)[iu][mask]
    P = np.exp(-d2)
    expected = P.mean()
    densities = []
    for seed in range(200):
        A = sample_graph(LatentState(U, 1.0), np.random.default_rng(seed), warn=False).dense()
        densities.append(A[iu][mask].mean())
    # variance of a single draw's density, from the independent Bernoulli terms
    se = math.sqrt(np.sum(P * (1 - P))) / P.size / math.sqrt(200)
    assert abs(np.mean(densities) - expected) <= 3 * se


def test_loglik_examples():
    K4 = build_graph([(i, j) for i in range(4) for j in range(i + 1, 4)], 4)
    assert log_likelihood_adjacency(K4, LatentState(np.zeros((4, 2)), 1.0)) == 0.0
    g = build_graph([(0, 1)], 2)
    state = LatentState(np.array([[0.0, 0.0], [1.0, 1.0]]), 2.0)
    assert log_likelihood_adjacency(g, state) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ShapeMismatch):
        log_likelihood_adjacency(g, LatentState(np.zeros((3, 2)), 1.0))


def test_loglik_minus_inf_sentinel():
    g = build_graph([(0, 1)], 3, warn=False)
    U = np.array([[0.0], [1.0], [1.0]])  # nodes 1 and 2 coincide but are not linked
    assert log_likelihood_adjacency(g, LatentState(U, 1.0)) == -math.inf


def test_loglik_matches_brute_force_n6():
    rng = np.random.default_rng(6)
    g = random_graph(6, 0.5, rng)
    U = rng.standard_normal((6, 2))
    assert log_likelihood_adjacency(g, LatentState(U, 1.3)) == pytest.approx(brute_loglik(g, U, 1.3), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1), st.floats(0.2, 5.0))
def test_loglik_brute_force_property(n, p, seed, s2):
    rng = np.random.default_rng(seed)
    g = random_graph(n, p, rng)
    U = rng.standard_normal((n, 2))
    ll = log_likelihood_adjacency(g, LatentState(U, s2))
    assert ll == pytest.approx(brute_loglik(g, U, s2), abs=1e-10, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1), st.floats(0.2, 5.0))
def test_surrogate_never_exceeds_exact_nll(n, p, seed, s2):
    rng = np.random.default_rng(seed)
    g = random_graph(n, p, rng)
    state = LatentState(rng.standard_normal((n, 2)), s2)
    assert surrogate_adjacency_nll(g, state) <= -log_likelihood_adjacency(g, state) + 1e-12


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SynthConfig(alpha=1.5)
    with pytest.raises(InvalidConfig):
        SynthConfig(n=3, M=4)
    with pytest.raises(InvalidConfig):
        SynthConfig(d=0)
    with pytest.raises(InvalidConfig):
        SynthConfig(M=16, d=2, k=2, alpha=0.0)  # four label bits do not fit in k=2


def test_informative_split():
    assert informative_split(0.0, 2) == (0, 2)
    assert informative_split(0.5, 2) == (1, 1)
    assert informative_split(1.0, 2) == (2, 0)
    assert informative_split(0.3, 2) == (1, 1)  # ceil(alpha * bits)


def _oracle(features, ds):
    clf = LogisticRegression(max_iter=2000)
    clf.fit(features[ds.train], ds.y[ds.train])
    return clf.score(features[ds.test], ds.y[ds.test])


def _oracle_scores(alpha, seed):
    ds, g = generate_synthetic(SynthConfig(alpha=alpha, seed=seed, train_frac=0.5, val_frac=0.1))
    U = ds.U_true
    return (_oracle(ds.X, ds), _oracle(U, ds), _oracle(np.hstack([ds.X, U]), ds))


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_feature_block_oracles(alpha):
    x_acc, u_acc, joint = np.mean([_oracle_scores(alpha, s) for s in range(5)], axis=0)
    if alpha == 0.0:
        assert x_acc <= 0.35 and u_acc >= 0.90
    elif alpha == 1.0:
        assert x_acc >= 0.90 and u_acc <= 0.35
    else:
        assert 0.45 <= x_acc <= 0.80 and 0.45 <= u_acc <= 0.80
        assert joint >= 0.90


def test_generated_dataset_shape_and_meta():
    ds, g = generate_synthetic(SynthConfig(seed=4))
    assert g.connected and g.n == ds.n
    assert ds.X.shape == (ds.n, 2) and ds.U_true.shape == (ds.n, 2)
    assert ds.n + len(ds.meta["dropped_nodes"]) == 200
    assert ds.meta["synth"]["seed"] == 4


def test_generation_is_deterministic():
    a, ga = generate_synthetic(SynthConfig(alpha=0.5, seed=11))
    b, gb = generate_synthetic(SynthConfig(alpha=0.5, seed=11))
    assert ga == gb and np.array_equal(a.X, b.X) and np.array_equal(a.train, b.train)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.integers(100, 300), st.integers(2, 4), st.sampled_from([0.0, 0.5, 1.0]),
       st.integers(0, 2**32 - 1))
def test_label_marginals_balanced(n, M, alpha, seed):
    ds, _ = generate_synthetic(SynthConfig(n=n, M=M, alpha=alpha, seed=seed))
    counts = np.bincount(ds.y, minlength=M)
    assert np.all(np.abs(counts - ds.n / M) <= 0.2 * ds.n / M), \
        f"class counts {counts.tolist()} for {ds.n} retained nodes ({len(ds.meta['dropped_nodes'])} dropped)"


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 500), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_assigned_labels_are_balanced_before_component_extraction(n, M, seed):
    from jane.genmodel import balanced_labels
    counts = np.bincount(balanced_labels(max(n, M), M, np.random.default_rng(seed)), minlength=M)
    assert counts.max() - counts.min() <= 1


def test_alpha_one_latent_block_carries_no_label_information():
    # permutation test on the mutual information between Y and quantised U
    ds, _ = generate_synthetic(SynthConfig(alpha=1.0, seed=0, n=400))
    rng = np.random.default_rng(0)
    bins = np.quantile(ds.U_true, [0.25, 0.5, 0.75], axis=0)
    q = sum((np.digitize(ds.U_true[:, c], bins[:, c]) * 4 ** c) for c in range(2))

    def mi(a, b):
        joint = np.zeros((a.max() + 1, b.max() + 1))
        np.add.at(joint, (a, b), 1.0)
        joint /= joint.sum()
        pa, pb = joint.sum(1, keepdims=True), joint.sum(0, keepdims=True)
        nz = joint > 0
        return float(np.sum(joint[nz] * np.log(joint[nz] / (pa @ pb)[nz])))

    observed = mi(ds.y, q)
    null = [mi(rng.permutation(ds.y), q) for _ in range(500)]
    p_value = (1 + sum(v >= observed for v in null)) / (1 + len(null))
    assert p_value > 0.01


def _toy(n, M, rng, unknown=0):
    y = np.arange(n) % M
    y[:unknown] = UNKNOWN
    return Dataset(X=np.zeros((n, 1)), y=y, train=[], val=[], test=np.arange(n))


def test_make_splits_sizes():
    rng = np.random.default_rng(0)
    ds = make_splits(_toy(200, 4, rng), 0.1, 0.2, rng)
    assert (ds.train.size, ds.val.size, ds.test.size) == (20, 40, 140)
    ds = make_splits(_toy(100, 4, rng), 0.5, 0.25, rng)
    per_class = np.bincount(ds.y[ds.train], minlength=4)
    assert np.all((per_class >= 12) & (per_class <= 13)) and per_class.sum() == 50


def test_make_splits_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidFraction):
        make_splits(_toy(20, 2, rng), 0.0, 0.2, rng)
    with pytest.raises(InvalidFraction):
        make_splits(_toy(20, 2, rng), 0.6, 0.4, rng)


def test_make_splits_sends_unknown_to_test():
    rng = np.random.default_rng(3)
    ds = make_splits(_toy(60, 3, rng, unknown=10), 0.2, 0.2, rng)
    assert np.all(ds.y[ds.train] >= 0) and np.all(ds.y[ds.val] >= 0)
    assert set(range(10)) <= set(ds.test.tolist())


@settings(max_examples=50, deadline=None)
@given(st.integers(10, 200), st.integers(2, 6), st.floats(0.05, 0.6), st.floats(0.0, 0.3),
       st.integers(0, 2**32 - 1))
def test_splits_partition_property(n, M, tf, vf, seed):
    rng = np.random.default_rng(seed)
    ds = make_splits(_toy(max(n, M), M, rng), tf, vf, rng)
    allidx = np.concatenate([ds.train, ds.val, ds.test])
    assert np.array_equal(np.sort(allidx), np.arange(ds.n))
