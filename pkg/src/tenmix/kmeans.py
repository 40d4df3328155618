"""Lloyd's k-means with k-means++ seeding.

Kept in-house so results depend only on the seed, never on thread counts.
"""
from __future__ import annotations

import numpy as np

from .errors import ArgumentError


def _sq_dists(x, centers, x_sq):
    d = x_sq[:, None] - 2 * x @ centers.T + np.sum(centers**2, axis=1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_pp_seeds(x, k, rng):
    """Indices of ``k`` seeds chosen by D² sampling."""
    n = x.shape[0]
    x_sq = np.sum(x**2, axis=1)
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(x, x[chosen], x_sq)[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every remaining point coincides with a seed
            cand = int(rng.choice(np.setdiff1d(np.arange(n), chosen)))
        else:
            cand = int(rng.choice(n, p=closest / total))
        chosen.append(cand)
        closest = np.minimum(closest, _sq_dists(x, x[[cand]], x_sq)[:, 0])
    return np.array(chosen)


def lloyd(x, centers, max_iter=100):
    x_sq = np.sum(x**2, axis=1)
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(x, centers, x_sq)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(centers.shape[0]):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
    d = _sq_dists(x, centers, x_sq)
    labels = np.argmin(d, axis=1)
    sse = float(np.sum(np.sum((x - centers[labels]) ** 2, axis=1)))
    return labels, centers, sse


def kmeans(x, k, n_restarts=10, max_iter=100, seed=0):
    """Cluster the rows of ``x``; returns ``(labels, centers, sse)`` of the best restart."""
    x = np.asarray(x, dtype=float)
    if not 1 <= k <= x.shape[0]:
        raise ArgumentError(f"need 1 <= k <= n, got k={k}, n={x.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_restarts):
        centers = x[kmeans_pp_seeds(x, k, rng)].copy()
        result = lloyd(x, centers, max_iter)
        if best is None or result[2] < best[2]:
            best = result
    return best
