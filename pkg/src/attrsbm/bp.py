"""Belief propagation on the sparse attributed block model.

Messages live on directed edges (CSR slots of :class:`AttributedNetwork`).
The influence of all non-neighbours is folded into an external field
``h(l) = sum_k sum_s G'[l, s] b_k(s)`` that is computed once per sweep; the
non-neighbour exponent for vertex ``j`` is then
``-(h(l) - sum_{k in nb(j) + {j}} (G' b_k)(l)) / |V|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .attributes import ModelParams, log_vertex_potential
from .network import AttributedNetwork

TINY = 1e-300
SCHEDULES = ("fixed", "random", "synchronous")


@dataclass(eq=False)
class BpState:
    messages: np.ndarray  # (2|E|, L); row e is m_{j->i} for slot e = j->i
    beliefs: np.ndarray  # (|V|, L)
    external_field: np.ndarray  # (L,)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0), repr=False)

    def copy(self) -> "BpState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return BpState(self.messages.copy(), self.beliefs.copy(), self.external_field.copy(), rng)


def _normalize_rows(a: np.ndarray) -> np.ndarray:
    return a / a.sum(axis=-1, keepdims=True)


def _normalize_log(logp: np.ndarray) -> np.ndarray:
    p = np.exp(logp - np.max(logp, axis=-1, keepdims=True))
    return p / p.sum(axis=-1, keepdims=True)


def compute_external_field(beliefs, gamma_prime) -> np.ndarray:
    return np.asarray(gamma_prime) @ np.asarray(beliefs).sum(axis=0)


def init_state(network: AttributedNetwork, params: ModelParams, seed) -> BpState:
    """Uniform[0, 1) random messages and beliefs, normalized."""
    rng = np.random.default_rng(seed)
    L = params.n_labels
    messages = _normalize_rows(rng.random((2 * network.n_edges, L)))
    beliefs = _normalize_rows(rng.random((network.n_vertices, L)))
    return BpState(messages, beliefs, compute_external_field(beliefs, params.gamma_prime), rng)


def _log_field(state: BpState, j: int, network: AttributedNetwork, params: ModelParams, log_phi_j):
    G = params.gamma_prime
    local = state.beliefs[network.neighbors(j)].sum(axis=0) + state.beliefs[j]
    return log_phi_j - (state.external_field - G @ local) / network.n_vertices


def _incoming_logs(state: BpState, j: int, network: AttributedNetwork, params: ModelParams):
    lo, hi = network.indptr[j], network.indptr[j + 1]
    incoming = state.messages[network.reverse[lo:hi]]  # m_{k->j} for k in nb(j)
    return np.log(np.maximum(incoming @ params.gamma_prime.T, TINY))


def update_message(state: BpState, slot: int, network: AttributedNetwork, params: ModelParams) -> np.ndarray:
    """New ``m_{j->i}`` for directed slot ``j -> i`` (state is not modified)."""
    j = int(np.searchsorted(network.indptr, slot, side="right") - 1)
    log_phi = log_vertex_potential(network.attributes[j], params)
    logs = _incoming_logs(state, j, network, params)
    keep = np.arange(network.indptr[j], network.indptr[j + 1]) != slot
    return _normalize_log(_log_field(state, j, network, params, log_phi) + logs[keep].sum(axis=0))


def compute_vertex_belief(state: BpState, i: int, network: AttributedNetwork, params: ModelParams) -> np.ndarray:
    log_phi = log_vertex_potential(network.attributes[i], params)
    logs = _incoming_logs(state, i, network, params)
    return _normalize_log(_log_field(state, i, network, params, log_phi) + logs.sum(axis=0))


def compute_edge_belief(state: BpState, edge, network: AttributedNetwork, params: ModelParams) -> np.ndarray:
    """``b_ij(x_i, x_j) ∝ G'[x_i, x_j] m_{i->j}(x_i) m_{j->i}(x_j)`` for an edge."""
    i, j = int(edge[0]), int(edge[1])
    try:
        s_ij, s_ji = network.slot(i, j), network.slot(j, i)
    except KeyError:
        raise ValueError(f"({i}, {j}) is not an edge; pair beliefs of non-edges factorize") from None
    b = params.gamma_prime * np.outer(state.messages[s_ij], state.messages[s_ji])
    return b / b.sum()


def edge_beliefs(state: BpState, network: AttributedNetwork, params: ModelParams) -> np.ndarray:
    """All edge beliefs, shape ``(|E|, L, L)``, aligned with ``network.edges``."""
    mi = state.messages[network.edge_slots[:, 0]]
    mj = state.messages[network.edge_slots[:, 1]]
    b = params.gamma_prime[None] * mi[:, :, None] * mj[:, None, :]
    total = b.sum(axis=(1, 2), keepdims=True)
    return b / np.where(total > 0, total, 1.0)


def mpm_labels(beliefs) -> np.ndarray:
    """Per-vertex argmax; ties resolve to the smallest label."""
    return np.argmax(np.asarray(beliefs), axis=1).astype(np.int64)


@njit(cache=True)
def _sweep_kernel(indptr, indices, reverse, log_phi, G, messages, beliefs, h, damping, order, synchronous):
    n, L = beliefs.shape
    inv_n = 1.0 / n
    Gb = beliefs @ G.T
    src = messages.copy() if synchronous else messages
    field = np.empty((n, L))
    for j in range(n):
        for l in range(L):
            acc = Gb[j, l]
            for e in range(indptr[j], indptr[j + 1]):
                acc += Gb[indices[e], l]
            field[j, l] = log_phi[j, l] - (h[l] - acc) * inv_n

    max_deg = 0
    for j in range(n):
        max_deg = max(max_deg, indptr[j + 1] - indptr[j])
    logs = np.empty((max_deg, L))
    total = np.empty(L)
    new = np.empty(L)
    max_delta = 0.0

    for j in order:
        lo, hi = indptr[j], indptr[j + 1]
        for l in range(L):
            total[l] = field[j, l]
        for p in range(hi - lo):
            r = reverse[lo + p]
            for l in range(L):
                acc = 0.0
                for s in range(L):
                    acc += G[l, s] * src[r, s]
                v = np.log(max(acc, 1e-300))
                logs[p, l] = v
                total[l] += v
        for p in range(hi - lo):
            e = lo + p
            mx = -np.inf
            for l in range(L):
                new[l] = total[l] - logs[p, l]
                mx = max(mx, new[l])
            z = 0.0
            for l in range(L):
                new[l] = np.exp(new[l] - mx)
                z += new[l]
            for l in range(L):
                v = (1.0 - damping) * new[l] / z + damping * messages[e, l]
                d = abs(v - messages[e, l])
                if d > max_delta:
                    max_delta = d
                messages[e, l] = v

    out = np.empty((n, L))
    for i in range(n):
        for l in range(L):
            total[l] = field[i, l]
        for e in range(indptr[i], indptr[i + 1]):
            r = reverse[e]
            for l in range(L):
                acc = 0.0
                for s in range(L):
                    acc += G[l, s] * messages[r, s]
                total[l] += np.log(max(acc, 1e-300))
        mx = -np.inf
        for l in range(L):
            mx = max(mx, total[l])
        z = 0.0
        for l in range(L):
            out[i, l] = np.exp(total[l] - mx)
            z += out[i, l]
        for l in range(L):
            out[i, l] /= z
    return out, max_delta


def sweep(
    state: BpState,
    network: AttributedNetwork,
    params: ModelParams,
    schedule: str = "fixed",
    damping: float = 0.0,
) -> tuple[BpState, float]:
    """One pass over every directed message, then all beliefs, then the field.

    ``fixed`` updates in place in source-major slot order, ``random`` uses a
    fresh seeded permutation of source vertices each sweep, ``synchronous``
    computes every message from the previous sweep's messages. Returns the
    largest absolute message change.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    n = network.n_vertices
    G = np.ascontiguousarray(params.gamma_prime, dtype=float)
    state.external_field = compute_external_field(state.beliefs, G)
    if n == 0:
        return state, 0.0
    order = state.rng.permutation(n) if schedule == "random" else np.arange(n)
    log_phi = np.ascontiguousarray(log_vertex_potential(network.attributes, params))
    beliefs, delta = _sweep_kernel(
        network.indptr,
        network.indices,
        network.reverse,
        log_phi,
        G,
        state.messages,
        np.ascontiguousarray(state.beliefs),
        state.external_field,
        float(damping),
        order.astype(np.int64),
        schedule == "synchronous",
    )
    state.beliefs = beliefs
    state.external_field = compute_external_field(beliefs, G)
    return state, float(delta)
