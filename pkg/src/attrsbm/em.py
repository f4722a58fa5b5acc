"""Closed-form EM updates and the interleaved BP/EM community detector."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .attributes import ModelParams, kmeanspp_1d, log_vertex_potential, sigma_floor_for
from .bp import edge_beliefs, init_state, mpm_labels, sweep
from .network import AttributedNetwork, ValidationError

log = logging.getLogger(__name__)


@dataclass
class DetectConfig:
    tol: float = 1e-6
    max_iterations: int = 500
    damping: float = 0.0
    schedule: str = "fixed"
    n_restarts: int = 1
    sigma_floor: float | None = None  # None: 1e-3 of the attribute std (min 1e-8)
    sigma_init: float = 1.0
    kmeans_rounds: int = 100
    gamma_floor: float = 1e-8
    responsibility_floor: float = 1e-6

    @classmethod
    def from_mapping(cls, mapping) -> "DetectConfig":
        known = cls.__dataclass_fields__
        unknown = set(mapping) - set(known)
        if unknown:
            raise ValidationError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**dict(mapping))


@dataclass
class DetectionResult:
    labels: np.ndarray
    beliefs: np.ndarray
    params: ModelParams
    iterations: int
    converged: bool
    trajectory: np.ndarray  # (iterations, 2): max message/belief change, max parameter change
    log_likelihood: float = float("nan")
    method: str = "bp-em"
    extras: dict = field(default_factory=dict)


def em_update_gamma(beliefs, gamma_floor: float = 1e-8) -> np.ndarray:
    g = np.asarray(beliefs, dtype=float).mean(axis=0)
    g = np.maximum(g, gamma_floor)
    return g / g.sum()


def em_update_gamma_prime(edge_beliefs, gamma_new, n_vertices: int) -> np.ndarray:
    """Affinity update from pair beliefs summed over edges.

    ``edge_beliefs`` has shape ``(..., L, L)``; leading axes are summed.
    """
    gamma_new = np.asarray(gamma_new, dtype=float)
    L = gamma_new.shape[0]
    eb = np.asarray(edge_beliefs, dtype=float).reshape(-1, L, L).sum(axis=0)
    sym = eb + eb.T  # diagonal holds 2 * sum b_ij(l, l)
    gp = sym / (n_vertices * np.outer(gamma_new, gamma_new))
    return np.clip(gp, 0.0, float(n_vertices))


def em_update_theta(
    beliefs,
    attributes,
    prev_mu=None,
    prev_sigma=None,
    sigma_floor: float = 1e-8,
    responsibility_floor: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(beliefs, dtype=float)
    d = np.asarray(attributes, dtype=float)
    w = b.sum(axis=0)
    safe = np.where(w > 0, w, 1.0)
    mu = (d @ b) / safe
    var = ((d[:, None] - mu[None, :]) ** 2 * b).sum(axis=0) / safe
    sigma = np.maximum(np.sqrt(var), sigma_floor)
    starved = w < responsibility_floor
    if np.any(starved) and prev_mu is not None:
        mu = np.where(starved, prev_mu, mu)
        sigma = np.where(starved, prev_sigma, sigma)
    return mu, sigma


def em_step(beliefs, edge_belief_sum, attributes, n_vertices, prev: ModelParams, cfg: DetectConfig, floor: float) -> ModelParams:
    gamma = em_update_gamma(beliefs, cfg.gamma_floor)
    gp = em_update_gamma_prime(edge_belief_sum, gamma, n_vertices)
    mu, sigma = em_update_theta(beliefs, attributes, prev.mu, prev.sigma, floor, cfg.responsibility_floor)
    return ModelParams(gamma, gp, mu, sigma)


def _xlogy(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, y, 1.0)), 0.0)


def approximate_q(network: AttributedNetwork, params: ModelParams, beliefs, edge_beliefs_) -> float:
    """Sparse-graph expected complete-data log-likelihood (up to a constant).

    Non-edge pairs use the factorized beliefs; the non-edge sum is evaluated
    exactly as all-pairs minus self minus edge terms.
    """
    b = np.asarray(beliefs, dtype=float)
    G = params.gamma_prime
    node = np.sum(b * np.where(b > 0, log_vertex_potential(network.attributes, params), 0.0))
    edge = float(np.sum(_xlogy(np.asarray(edge_beliefs_), G[None])))
    tot = b.sum(axis=0)
    all_pairs = 0.5 * (tot @ G @ tot - np.einsum("il,ls,is->", b, G, b))
    e = network.edges
    on_edges = np.einsum("il,ls,is->", b[e[:, 0]], G, b[e[:, 1]]) if e.size else 0.0
    return float(node + edge - (all_pairs - on_edges) / network.n_vertices)


def initial_params(network: AttributedNetwork, L_max: int, cfg: DetectConfig, seed, floor: float) -> ModelParams:
    """Uniform prior, flat affinity ``2|E| / (|V| - 1)``, k-means++ means, ``sigma_init``."""
    n = network.n_vertices
    centers, _ = kmeanspp_1d(network.attributes, L_max, seed, cfg.kmeans_rounds)
    flat = 2.0 * network.n_edges / (n - 1) if n > 1 else 0.0
    return ModelParams(
        np.full(L_max, 1.0 / L_max),
        np.full((L_max, L_max), min(flat, float(n))),
        centers,
        np.full(L_max, max(cfg.sigma_init, floor)),
    )


def check_inputs(network: AttributedNetwork, L_max: int):
    if network.n_vertices == 0:
        raise ValidationError("network has no vertices")
    if L_max < 1:
        raise ValidationError("L_max must be at least 1")
    if L_max > network.n_vertices:
        raise ValidationError(f"L_max={L_max} exceeds |V|={network.n_vertices}")


def _run_bp_em(network: AttributedNetwork, L_max: int, cfg: DetectConfig, seed) -> DetectionResult:
    km_seed, state_seed = as_seed_sequence(seed).spawn(2)
    d = network.attributes
    floor = cfg.sigma_floor if cfg.sigma_floor is not None else sigma_floor_for(d)
    params = initial_params(network, L_max, cfg, km_seed, floor)
    state = init_state(network, params, state_seed)

    trajectory = []
    converged = False
    eb = None
    for _ in range(cfg.max_iterations):
        state, dm = sweep(state, network, params, cfg.schedule, cfg.damping)
        eb = edge_beliefs(state, network, params)
        new = em_step(state.beliefs, eb, d, network.n_vertices, params, cfg, floor)
        dp = new.max_abs_diff(params)
        params = new
        trajectory.append((dm, dp))
        if dm < cfg.tol and dp < cfg.tol:
            converged = True
            break
    return DetectionResult(
        labels=mpm_labels(state.beliefs),
        beliefs=state.beliefs,
        params=params,
        iterations=len(trajectory),
        converged=converged,
        trajectory=np.array(trajectory).reshape(-1, 2),
        log_likelihood=approximate_q(network, params, state.beliefs, eb),
        method="bp-em",
    )


def as_seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def restart_seeds(seed, n_restarts: int):
    if n_restarts == 1:
        return [seed]
    return as_seed_sequence(seed).spawn(n_restarts)


def best_of(runs):
    # ties keep the earliest restart
    best = runs[0]
    for r in runs[1:]:
        if r.log_likelihood > best.log_likelihood:
            best = r
    return best


def detect(network: AttributedNetwork, L_max: int, config: DetectConfig | None = None, seed=0) -> DetectionResult:
    """Community labels by interleaving one BP sweep with one EM update.

    Stops when both the largest message change and the largest parameter
    change fall below ``config.tol`` or after ``config.max_iterations``.
    With ``n_restarts > 1`` the run with the highest approximate
    log-likelihood is returned.
    """
    cfg = config or DetectConfig()
    check_inputs(network, L_max)
    runs = [_run_bp_em(network, L_max, cfg, s) for s in restart_seeds(seed, cfg.n_restarts)]
    result = best_of(runs)
    if not result.converged:
        log.debug("bp-em stopped after %d iterations without converging", result.iterations)
    return result
