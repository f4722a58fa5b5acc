"""Permutation-matched accuracy and Newman modularity."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .network import AttributedNetwork, ValidationError


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    modularity: float
    best_permutation: np.ndarray  # predicted label -> true label


def confusion(predicted, truth, n_labels: int) -> np.ndarray:
    C = np.zeros((n_labels, n_labels), dtype=np.int64)
    np.add.at(C, (predicted, truth), 1)
    return C


def _prepare(predicted, truth, L_max):
    p = np.asarray(predicted, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape:
        raise ValidationError(f"length mismatch: {p.shape[0]} predicted vs {t.shape[0]} true labels")
    K = max(int(L_max), int(p.max(initial=-1)) + 1, int(t.max(initial=-1)) + 1)
    return p, t, K


def accuracy(predicted, truth, L_max: int) -> tuple[float, np.ndarray]:
    """Best fraction of agreeing labels over all relabelings of ``predicted``.

    Solved as a linear assignment on the confusion matrix; the label alphabet
    is padded to cover both labelings. Returns ``(accuracy, perm)`` with
    ``perm[predicted_label] = true_label``.
    """
    p, t, K = _prepare(predicted, truth, L_max)
    if p.size == 0:
        return 1.0, np.arange(K)
    C = confusion(p, t, K)
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(K, dtype=np.int64)
    perm[rows] = cols
    return float(C[rows, cols].sum()) / p.size, perm


def accuracy_bruteforce(predicted, truth, L_max: int) -> tuple[float, np.ndarray]:
    """Exhaustive search over all ``K!`` relabelings (small ``K`` only)."""
    p, t, K = _prepare(predicted, truth, L_max)
    if K > 8:
        raise ValueError("brute force limited to 8 labels")
    C = confusion(p, t, K)
    best, best_perm = -1, None
    for perm in itertools.permutations(range(K)):
        hits = int(C[np.arange(K), perm].sum())
        if hits > best:
            best, best_perm = hits, perm
    return best / max(p.size, 1), np.array(best_perm)


def modularity(labels, network: AttributedNetwork) -> float:
    """Newman modularity as a per-community sum of edge fraction minus
    squared degree fraction. Zero (with a warning) for edgeless graphs."""
    x = np.asarray(labels, dtype=np.int64)
    m = network.n_edges
    if m == 0:
        warnings.warn("modularity of an edgeless network is defined as 0", RuntimeWarning, stacklevel=2)
        return 0.0
    K = int(x.max()) + 1
    e = network.edges
    same = x[e[:, 0]] == x[e[:, 1]]
    inside = np.bincount(x[e[same, 0]], minlength=K)
    deg = np.bincount(x, weights=network.degrees, minlength=K)
    return float(np.sum(inside / m - (deg / (2.0 * m)) ** 2))


def evaluate(predicted, truth, network: AttributedNetwork, L_max: int) -> EvalReport:
    acc, perm = accuracy(predicted, truth, L_max)
    return EvalReport(acc, modularity(predicted, network), perm)
