import numpy as np
import pytest
from hypothesis import given, strategies as st

from attrsbm.attributes import ModelParams
from attrsbm.bp import (
    compute_edge_belief,
    compute_external_field,
    compute_vertex_belief,
    edge_beliefs,
    init_state,
    mpm_labels,
    sweep,
    update_message,
)
from attrsbm.network import AttributedNetwork

from oracles import exact_marginals, instance, literal_belief, literal_message, literal_sweep, log_gauss, softmax


# --- init_state / external field ---


def test_init_state_normalized_and_deterministic():
    net, params, s = instance(1, n=20, L=3)
    assert np.allclose(s.messages.sum(1), 1, atol=1e-12, rtol=0)
    assert np.allclose(s.beliefs.sum(1), 1, atol=1e-12, rtol=0)
    t = init_state(net, params, 99)
    u = init_state(net, params, 99)
    assert np.array_equal(t.messages, u.messages) and np.array_equal(t.beliefs, u.beliefs)


@pytest.mark.parametrize("seed", range(5))
def test_external_field_vs_double_sum(seed):
    net, params, s = instance(seed)
    L = params.n_labels
    direct = np.array([sum(params.gamma_prime[l, t] * s.beliefs[k, t] for k in range(net.n_vertices) for t in range(L)) for l in range(L)])
    assert np.allclose(s.external_field, direct, rtol=1e-12, atol=0)


def test_external_field_examples():
    b = np.random.default_rng(0).dirichlet(np.ones(3), size=7)
    assert np.allclose(compute_external_field(b, 2.5 * np.ones((3, 3))), 2.5 * 7, rtol=1e-14)
    assert np.allclose(compute_external_field(np.array([[0.3, 0.7]]), 4 * np.eye(2)), [1.2, 2.8])


@pytest.mark.parametrize("seed", range(50))
def test_field_rearrangement_equals_direct_non_neighbour_sum(seed):
    net, params, s = instance(seed)
    G = params.gamma_prime
    h = compute_external_field(s.beliefs, G)
    for j in range(net.n_vertices):
        nb = net.neighbors(j)
        fast = h - G @ (s.beliefs[nb].sum(0) + s.beliefs[j])
        others = np.setdiff1d(np.arange(net.n_vertices), np.append(nb, j))
        direct = (s.beliefs[others] @ G.T).sum(0)
        assert np.allclose(fast, direct, rtol=1e-9, atol=1e-9 * np.abs(h).max())


# --- single-item updates against the literal formulas ---


@pytest.mark.parametrize("seed", range(20))
def test_update_message_matches_literal(seed):
    net, params, s = instance(seed, n=6 if seed < 10 else None, L=2 if seed < 10 else None)
    for j in range(net.n_vertices):
        for i in net.neighbors(j):
            got = update_message(s, net.slot(j, int(i)), net, params)
            assert np.allclose(got, literal_message(s, net, params, j, int(i)), atol=1e-10, rtol=0)


@pytest.mark.parametrize("seed", range(20))
def test_vertex_belief_matches_literal(seed):
    net, params, s = instance(seed, n=6 if seed < 10 else None, L=2 if seed < 10 else None)
    for i in range(net.n_vertices):
        assert np.allclose(compute_vertex_belief(s, i, net, params), literal_belief(s, net, params, i), atol=1e-10, rtol=0)


@pytest.mark.parametrize("seed", range(10))
def test_sweep_matches_literal_sweep(seed):
    net, params, s = instance(seed, p=0.2)
    want = literal_sweep(s, net, params)
    got, _ = sweep(s.copy(), net, params)
    assert np.allclose(got.messages, want.messages, atol=1e-10, rtol=0)
    assert np.allclose(got.beliefs, want.beliefs, atol=1e-10, rtol=0)


def test_flat_affinity_message_is_potential_only():
    net, params, s = instance(3, n=10, L=3, p=0.5)
    params = params.with_(gamma_prime=np.full((3, 3), 2.0))
    s.external_field = compute_external_field(s.beliefs, params.gamma_prime)
    want = softmax(np.log(params.gamma) + log_gauss(net.attributes[0], params.mu, params.sigma))
    i = int(net.neighbors(0)[0])
    assert np.allclose(update_message(s, net.slot(0, i), net, params), want, atol=1e-12)


def test_degree_one_vertex_message():
    net = AttributedNetwork(4, [(0, 1), (1, 2)], [0.0, 1.0, 2.0, 3.0])
    params = ModelParams([0.5, 0.5], [[3.0, 1.0], [1.0, 2.0]], [0.0, 2.0], [1.0, 1.0])
    s = init_state(net, params, 0)
    far = (s.beliefs[[2, 3]] @ params.gamma_prime.T).sum(0)
    want = softmax(np.log(params.gamma) + log_gauss(0.0, params.mu, params.sigma) - far / 4)
    assert np.allclose(update_message(s, net.slot(0, 1), net, params), want, atol=1e-12)


def test_isolated_vertex_and_full_symmetry():
    net = AttributedNetwork(3, [(0, 1)], [0.5, -1.0, 7.0])
    params = ModelParams([0.3, 0.7], [[2.0, 0.5], [0.5, 1.0]], [0.0, 5.0], [1.0, 2.0])
    s = init_state(net, params, 4)
    far = (s.beliefs[[0, 1]] @ params.gamma_prime.T).sum(0)
    want = softmax(np.log(params.gamma) + log_gauss(7.0, params.mu, params.sigma) - far / 3)
    assert np.allclose(compute_vertex_belief(s, 2, net, params), want, atol=1e-12)

    sym = ModelParams([0.5, 0.5], np.full((2, 2), 1.5), [1.0, 1.0], [2.0, 2.0])
    s = init_state(net, sym, 4)
    for i in range(3):
        assert np.allclose(compute_vertex_belief(s, i, net, sym), 0.5, atol=1e-14)


# --- edge beliefs ---


def test_edge_belief_examples():
    net, params, s = instance(7, n=12, L=3, p=0.4)
    i, j = (int(x) for x in net.edges[0])
    ones = params.with_(gamma_prime=np.ones((3, 3)))
    b = compute_edge_belief(s, (i, j), net, ones)
    assert np.allclose(b, np.outer(s.messages[net.slot(i, j)], s.messages[net.slot(j, i)]), atol=1e-14)
    s.messages[net.slot(j, i)] = s.messages[net.slot(i, j)]
    assert np.allclose(compute_edge_belief(s, (i, j), net, params), compute_edge_belief(s, (i, j), net, params).T, atol=1e-15)
    with pytest.raises(ValueError):
        nonedge = next((a, c) for a in range(12) for c in range(a + 1, 12) if c not in net.neighbors(a))
        compute_edge_belief(s, nonedge, net, params)


@pytest.mark.parametrize("seed", range(10))
def test_edge_belief_marginals(seed):
    net, params, s = instance(seed, p=0.3)
    G = params.gamma_prime
    all_b = edge_beliefs(s, net, params)
    for e, (i, j) in enumerate(net.edges):
        mi, mj = s.messages[net.slot(i, j)], s.messages[net.slot(j, i)]
        b = compute_edge_belief(s, (i, j), net, params)
        assert np.allclose(all_b[e], b, atol=1e-14)
        assert abs(b.sum() - 1) < 1e-10
        row = mi * (G @ mj)
        col = mj * (G.T @ mi)
        assert np.allclose(b.sum(1), row / row.sum(), atol=1e-10)
        assert np.allclose(b.sum(0), col / col.sum(), atol=1e-10)


# --- sweep behaviour ---


def test_sweep_fixed_point_and_determinism():
    net, params, s = instance(11, n=40, L=2, p=0.1)
    a, b = s.copy(), s.copy()
    for _ in range(30):
        a, da = sweep(a, net, params)
        b, db = sweep(b, net, params)
        assert da == db
    assert np.array_equal(a.messages, b.messages) and np.array_equal(a.beliefs, b.beliefs)
    for _ in range(300):
        a, d = sweep(a, net, params)
        if d < 1e-12:
            break
    _, d = sweep(a, net, params)
    assert d < 1e-6


@pytest.mark.parametrize("schedule", ["random", "synchronous"])
def test_other_schedules_deterministic(schedule):
    net, params, s = instance(12, n=30, L=3, p=0.15)
    a, b = s.copy(), s.copy()
    for _ in range(5):
        a, _ = sweep(a, net, params, schedule, damping=0.3)
        b, _ = sweep(b, net, params, schedule, damping=0.3)
    assert np.array_equal(a.messages, b.messages)


def test_sweep_rejects_bad_options():
    net, params, s = instance(1, n=5, L=2)
    with pytest.raises(ValueError):
        sweep(s, net, params, schedule="backwards")
    with pytest.raises(ValueError):
        sweep(s, net, params, damping=1.0)


def test_star_graph_concentrates_on_exact_posterior():
    truth = np.array([0, 1, 0, 1, 1])
    net = AttributedNetwork(5, [(0, k) for k in range(1, 5)], 10.0 * truth + np.array([0.05, -0.08, 0.02, 0.1, -0.03]))
    params = ModelParams([0.5, 0.5], [[2.0, 1.5], [1.5, 2.0]], [0.0, 10.0], [0.1, 0.1])
    exact = exact_marginals(net, params)
    assert np.array_equal(mpm_labels(exact), truth)
    s = init_state(net, params, 0)
    for _ in range(10):
        s, _ = sweep(s, net, params)
    assert np.array_equal(mpm_labels(s.beliefs), truth)
    assert np.all(s.beliefs[np.arange(5), truth] >= 0.99)


def test_mpm_labels():
    assert mpm_labels([[0.9, 0.1]])[0] == 0
    assert mpm_labels([[0.5, 0.5]])[0] == 0
    assert mpm_labels([[0.2, 0.4, 0.4]])[0] == 1
    b = np.random.default_rng(0).dirichlet(np.ones(4), size=200)
    scan = [max(range(4), key=lambda l: (row[l], -l)) for row in b]
    assert mpm_labels(b).tolist() == scan


# --- invariant suites ---


@given(st.integers(0, 2**31 - 1), st.sampled_from(["fixed", "random", "synchronous"]), st.floats(0, 0.9))
def test_normalization_after_sweeps(seed, schedule, damping):
    net, params, s = instance(seed)
    for _ in range(3):
        s, _ = sweep(s, net, params, schedule, damping)
        assert np.all(s.messages >= 0) and np.all(s.beliefs >= 0)
        assert np.allclose(s.messages.sum(1), 1, atol=1e-10, rtol=0)
        assert np.allclose(s.beliefs.sum(1), 1, atol=1e-10, rtol=0)
    assert np.all(np.abs(edge_beliefs(s, net, params).sum((1, 2)) - 1) < 1e-10)


def permuted_state(s, rho):
    t = s.copy()
    t.messages, t.beliefs = s.messages[:, rho].copy(), s.beliefs[:, rho].copy()
    t.external_field = s.external_field[rho].copy()
    return t


@given(st.integers(0, 2**31 - 1))
def test_permutation_equivariance(seed):
    net, params, s = instance(seed)
    rho = np.random.default_rng(seed).permutation(params.n_labels)
    a, b = s.copy(), permuted_state(s, rho)
    pp = params.permuted(rho)
    for _ in range(3):
        a, _ = sweep(a, net, params)
        b, _ = sweep(b, net, pp)
    assert np.allclose(b.beliefs, a.beliefs[:, rho], atol=1e-10, rtol=0)
    assert np.allclose(b.messages, a.messages[:, rho], atol=1e-10, rtol=0)
