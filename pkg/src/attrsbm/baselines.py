"""Competitors: naive mean field on the same model, and attribute-only k-means++.

Naive mean field fixed point (one asynchronous pass per EM step)::

    b_i(l) ∝ phi_i(l) * exp[ sum_{j in nb(i)} sum_s b_j(s) log G'[l, s]
                             - (1/|V|) sum_{j != i} sum_s b_j(s) G'[l, s] ]

It follows from the factorized posterior with ``log(1 - G'/|V|) ≈ -G'/|V|``
on non-edges. EM uses pair beliefs ``b_i ⊗ b_j`` on edges and a single
attribute variance shared by all labels. This is a reconstruction of the
original method's model and constraints, not a verbatim port of its
update schedule.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .attributes import ModelParams, kmeanspp_1d, log_vertex_potential, sigma_floor_for
from .bp import mpm_labels
from .em import (
    DetectConfig,
    DetectionResult,
    approximate_q,
    as_seed_sequence,
    best_of,
    check_inputs,
    em_update_gamma,
    em_update_gamma_prime,
    em_update_theta,
    initial_params,
    restart_seeds,
)
from .network import AttributedNetwork

LOG_FLOOR = 1e-300


@njit(cache=True)
def _mf_kernel(indptr, indices, log_phi, logG, G, beliefs):
    n, L = beliefs.shape
    inv_n = 1.0 / n
    total = np.zeros(L)
    for i in range(n):
        for s in range(L):
            total[s] += beliefs[i, s]
    expo = np.empty(L)
    max_delta = 0.0
    for i in range(n):
        for l in range(L):
            acc = log_phi[i, l]
            for e in range(indptr[i], indptr[i + 1]):
                k = indices[e]
                for s in range(L):
                    acc += beliefs[k, s] * logG[l, s]
            rest = 0.0
            for s in range(L):
                rest += (total[s] - beliefs[i, s]) * G[l, s]
            expo[l] = acc - rest * inv_n
        mx = -np.inf
        for l in range(L):
            mx = max(mx, expo[l])
        z = 0.0
        for l in range(L):
            expo[l] = np.exp(expo[l] - mx)
            z += expo[l]
        for l in range(L):
            v = expo[l] / z
            d = abs(v - beliefs[i, l])
            if d > max_delta:
                max_delta = d
            total[l] += v - beliefs[i, l]
            beliefs[i, l] = v
    return max_delta


def mean_field_sweep(beliefs: np.ndarray, network: AttributedNetwork, params: ModelParams) -> float:
    """One in-place asynchronous pass over all vertices; returns max change."""
    if network.n_vertices == 0:
        return 0.0
    G = np.ascontiguousarray(params.gamma_prime, dtype=float)
    logG = np.log(np.maximum(G, LOG_FLOOR))
    log_phi = np.ascontiguousarray(log_vertex_potential(network.attributes, params))
    return float(_mf_kernel(network.indptr, network.indices, log_phi, logG, G, beliefs))


def mean_field_edge_beliefs(beliefs, network: AttributedNetwork) -> np.ndarray:
    e = network.edges
    return beliefs[e[:, 0], :, None] * beliefs[e[:, 1], None, :]


def shared_sigma(beliefs, attributes, mu, floor: float) -> np.ndarray:
    b = np.asarray(beliefs)
    d = np.asarray(attributes)
    var = float(((d[:, None] - mu[None, :]) ** 2 * b).sum() / d.shape[0])
    return np.full(b.shape[1], max(np.sqrt(var), floor))


def _run_naive_mf(network: AttributedNetwork, L_max: int, cfg: DetectConfig, seed) -> DetectionResult:
    km_seed, state_seed = as_seed_sequence(seed).spawn(2)
    d = network.attributes
    floor = cfg.sigma_floor if cfg.sigma_floor is not None else sigma_floor_for(d)
    params = initial_params(network, L_max, cfg, km_seed, floor)
    rng = np.random.default_rng(state_seed)
    beliefs = rng.random((network.n_vertices, L_max))
    beliefs /= beliefs.sum(axis=1, keepdims=True)

    trajectory = []
    converged = False
    for _ in range(cfg.max_iterations):
        db = mean_field_sweep(beliefs, network, params)
        eb = mean_field_edge_beliefs(beliefs, network)
        gamma = em_update_gamma(beliefs, cfg.gamma_floor)
        gp = em_update_gamma_prime(eb, gamma, network.n_vertices)
        mu, _ = em_update_theta(beliefs, d, params.mu, params.sigma, floor, cfg.responsibility_floor)
        new = ModelParams(gamma, gp, mu, shared_sigma(beliefs, d, mu, floor))
        dp = new.max_abs_diff(params)
        params = new
        trajectory.append((db, dp))
        if db < cfg.tol and dp < cfg.tol:
            converged = True
            break
    eb = mean_field_edge_beliefs(beliefs, network)
    return DetectionResult(
        labels=mpm_labels(beliefs),
        beliefs=beliefs,
        params=params,
        iterations=len(trajectory),
        converged=converged,
        trajectory=np.array(trajectory).reshape(-1, 2),
        log_likelihood=approximate_q(network, params, beliefs, eb),
        method="naive-mf",
    )


def detect_naive_mf(network: AttributedNetwork, L_max: int, config: DetectConfig | None = None, seed=0) -> DetectionResult:
    cfg = config or DetectConfig()
    check_inputs(network, L_max)
    return best_of([_run_naive_mf(network, L_max, cfg, s) for s in restart_seeds(seed, cfg.n_restarts)])


def detect_kmeans_only(attributes, L_max: int, seed=0, rounds: int = 100) -> np.ndarray:
    """Cluster the attributes alone; cluster index (ascending center) is the label."""
    _, assignment = kmeanspp_1d(attributes, L_max, seed, rounds)
    return assignment
