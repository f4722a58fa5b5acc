"""Model parameters, Gaussian vertex potentials and 1-D k-means++."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .network import ValidationError

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Label prior ``gamma``, scaled affinities ``gamma_prime`` (= |V| * edge
    probability) and per-label Gaussian attribute ``mu`` / ``sigma``."""

    gamma: np.ndarray
    gamma_prime: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        for name in ("gamma", "gamma_prime", "mu", "sigma"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        L = self.gamma.shape[0]
        if self.gamma_prime.shape != (L, L) or self.mu.shape != (L,) or self.sigma.shape != (L,):
            raise ValidationError("inconsistent parameter shapes")

    @property
    def n_labels(self) -> int:
        return int(self.gamma.shape[0])

    def validate(self, n_vertices: int | None = None, sigma_floor: float = 0.0) -> "ModelParams":
        if np.any(self.gamma < 0) or abs(self.gamma.sum() - 1.0) > 1e-12:
            raise ValidationError("gamma must be a probability vector")
        gp = self.gamma_prime
        if np.any(np.abs(gp - gp.T) > 1e-12):
            raise ValidationError("gamma_prime must be symmetric")
        if np.any(gp < 0) or (n_vertices is not None and np.any(gp > n_vertices)):
            raise ValidationError("gamma_prime entries must lie in [0, |V|]")
        if np.any(self.sigma <= 0) or np.any(self.sigma < sigma_floor):
            raise ValidationError("sigma below floor")
        return self

    def permuted(self, perm) -> "ModelParams":
        """Relabel: new label ``a`` takes the parameters of old label ``perm[a]``."""
        p = np.asarray(perm)
        return ModelParams(self.gamma[p], self.gamma_prime[np.ix_(p, p)], self.mu[p], self.sigma[p])

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def max_abs_diff(self, other: "ModelParams") -> float:
        return max(
            float(np.max(np.abs(a - b), initial=0.0))
            for a, b in (
                (self.gamma, other.gamma),
                (self.gamma_prime, other.gamma_prime),
                (self.mu, other.mu),
                (self.sigma, other.sigma),
            )
        )


def protocol_params(n_labels: int, sigma: float, spacing: float = 10.0) -> ModelParams:
    """Attribute-generation setting of the benchmarks: ``mu_l = spacing * l``,
    shared ``sigma``, uniform prior. ``gamma_prime`` is left at zero."""
    L = int(n_labels)
    return ModelParams(np.full(L, 1.0 / L), np.zeros((L, L)), spacing * np.arange(L), np.full(L, float(sigma)))


def sigma_floor_for(attributes, rel: float = 1e-3, abs_min: float = 1e-8) -> float:
    d = np.asarray(attributes, dtype=float)
    spread = float(d.std()) if d.size else 0.0
    return max(rel * spread, abs_min)


def log_vertex_potential(d, params: ModelParams) -> np.ndarray:
    """``log gamma_l + log N(d; mu_l, sigma_l)``; shape ``(L,)`` for scalar ``d``
    and ``(n, L)`` for an array of attributes."""
    d = np.asarray(d, dtype=float)
    z = (d[..., None] - params.mu) / params.sigma
    with np.errstate(divide="ignore"):
        log_gamma = np.log(params.gamma)
    return log_gamma - np.log(params.sigma) - 0.5 * LOG_2PI - 0.5 * z * z


def sample_attributes(labels, params: ModelParams, seed) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return params.mu[labels] + params.sigma[labels] * rng.standard_normal(labels.shape[0])


def _assign(values, centers):
    # nearest center; ties go to the lower index
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def kmeanspp_1d(values, k: int, seed, rounds: int = 100, local_trials: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Greedy k-means++ seeding followed by Lloyd iterations.

    Each new center is the best of ``local_trials`` D^2-weighted draws
    (default ``2 + ln k``); ``local_trials=1`` is plain k-means++.

    Returns ``(centers, assignment)`` with centers sorted ascending and the
    assignment indexing into the sorted centers.
    """
    x = np.asarray(values, dtype=float).reshape(-1)
    k = int(k)
    if k < 1:
        raise ValidationError("k must be at least 1")
    if x.size == 0:
        raise ValidationError("values must be non-empty")
    n_distinct = np.unique(x).size
    if k > n_distinct:
        raise ValidationError(f"k={k} exceeds the {n_distinct} distinct values")

    rng = np.random.default_rng(seed)
    trials = local_trials if local_trials is not None else 2 + int(np.log(k))
    centers = np.empty(k)
    centers[0] = x[rng.integers(x.size)]
    d2 = (x - centers[0]) ** 2
    for c in range(1, k):
        # D^2 sampling; among `trials` candidates keep the one with the lowest potential
        cum = np.cumsum(d2)
        idx = np.minimum(np.searchsorted(cum, rng.random(trials) * cum[-1], side="right"), x.size - 1)
        for t in range(trials):
            while d2[idx[t]] == 0.0:  # landed on a float boundary; step to next positive mass
                idx[t] = (idx[t] + 1) % x.size
        cand = np.minimum(d2[None, :], (x[None, :] - x[idx][:, None]) ** 2)
        best = int(np.argmin(cand.sum(axis=1)))
        centers[c] = x[idx[best]]
        d2 = cand[best]

    assign = _assign(x, centers)
    for _ in range(rounds):
        new = centers.copy()
        for c in range(k):
            members = x[assign == c]
            if members.size:
                new[c] = members.mean()
        empty = [c for c in range(k) if not np.any(assign == c)]
        for c in empty:
            dist = np.min(np.abs(x[:, None] - new[None, :]), axis=1)
            new[c] = x[int(np.argmax(dist))]
        new_assign = _assign(x, new)
        done = np.array_equal(new_assign, assign) and np.array_equal(new, centers)
        centers, assign = new, new_assign
        if done:
            break

    order = np.argsort(centers, kind="stable")
    rank = np.empty(k, dtype=np.int64)
    rank[order] = np.arange(k)
    return centers[order], rank[assign]
