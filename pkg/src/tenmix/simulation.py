"""Synthetic tensor mixtures with sparse CP means and block-exchangeable covariances.

Cluster ``k`` has mean ``Σ_r s_{kr} β_r ∘ β_r ∘ ... ∘ β_r`` where ``β_r`` is
``μ`` on a 3-long block starting at coordinate ``2r`` (see
:func:`block_support` for short modes) and ``s_{kr} = ±1``
follows the sign pattern below. Every mode covariance is block diagonal with
``5×5`` exchangeable blocks of correlation ``ν``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .params import CpMean, ModelParams, PrecisionSet, identifiable
from .tensor_normal import TnParams, sample

# rows are clusters, columns rank-one terms
SIGN_PATTERN = np.array([
    [1, 1, 1, 1],
    [1, -1, 1, -1],
    [-1, -1, -1, -1],
    [-1, 1, -1, 1],
])
BLOCK_LEN = 3
BLOCK_STEP = 2
CORR_BLOCK = 5


@dataclass
class SimDesign:
    n: int = 400
    dims: tuple = (10, 10, 10)
    K: int = 4
    R: int = 4
    mu: float = 0.85
    nu: float = 0.3
    seed: int = 0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if not 1 <= self.R <= SIGN_PATTERN.shape[1]:
            raise ArgumentError(f"R must lie in [1, {SIGN_PATTERN.shape[1]}], got {self.R}")
        patterns = sign_patterns(self.R)
        if not 1 <= self.K <= len(patterns):
            raise ArgumentError(
                f"R={self.R} admits at most {len(patterns)} distinct clusters, got K={self.K}"
            )
        if min(self.dims) < 1:
            raise ArgumentError(f"dimensions must be positive, got {self.dims}")
        if self.n < self.K:
            raise ArgumentError(f"need n >= K, got n={self.n}, K={self.K}")
        if not -1 / (CORR_BLOCK - 1) < self.nu < 1:
            raise ArgumentError(f"nu={self.nu} gives a non-positive-definite correlation block")


def sign_patterns(R):
    """Distinct cluster sign rows of the first ``R`` columns, in order."""
    rows = []
    for row in SIGN_PATTERN[:, :R]:
        if not any(np.array_equal(row, q) for q in rows):
            rows.append(row)
    return np.array(rows)


def block_support(d, r):
    """Coordinates of term ``r``: a block of ``min(3, d)`` starting at ``2r``,
    shifted left when it would run past the end."""
    length = min(BLOCK_LEN, d)
    start = min(BLOCK_STEP * r, d - length)
    return np.arange(start, start + length)


def support_vector(d, r, mu):
    b = np.zeros(d)
    b[block_support(d, r)] = mu
    return b


def block_covariance(d, nu):
    """Block-diagonal covariance of ``5×5`` exchangeable blocks; a last partial block is truncated."""
    block = (1 - nu) * np.eye(CORR_BLOCK) + nu * np.ones((CORR_BLOCK, CORR_BLOCK))
    out = np.zeros((d, d))
    for start in range(0, d, CORR_BLOCK):
        stop = min(start + CORR_BLOCK, d)
        out[start:stop, start:stop] = block[:stop - start, :stop - start]
    return out


def true_params(design):
    """Ground-truth :class:`ModelParams` in normalized form."""
    M = len(design.dims)
    signs = sign_patterns(design.R)[:design.K]
    w = abs(design.mu) ** M * np.prod([np.sqrt(min(BLOCK_LEN, d)) for d in design.dims])
    units = [
        np.stack([support_vector(d, r, 1.0) / np.sqrt(min(BLOCK_LEN, d)) for r in range(design.R)],
                 axis=1)
        for d in design.dims
    ]
    # μ^M from the unnormalized vectors; its sign goes to mode 0 like every flip
    mu_sign = 1.0 if design.mu >= 0 else (-1.0) ** M
    means = []
    for k in range(design.K):
        factors = [u.copy() for u in units]
        factors[0] = factors[0] * (signs[k] * mu_sign)
        means.append(CpMean(np.full(design.R, w), factors))
    omegas = identifiable([np.linalg.inv(block_covariance(d, design.nu)) for d in design.dims])
    precs = [PrecisionSet([o.copy() for o in omegas]) for _ in range(design.K)]
    return ModelParams(np.full(design.K, 1.0 / design.K), means, precs)


def cluster_sizes(n, K):
    sizes = np.full(K, n // K)
    sizes[:n % K] += 1
    return sizes


def generate(design):
    """Draw ``(data, labels, truth)`` for ``design``.

    Clusters are equal-sized (up to one sample when ``K`` does not divide
    ``n``) and the samples appear in random order.
    """
    truth = true_params(design)
    rng = np.random.default_rng(design.seed)
    labels = np.repeat(np.arange(design.K), cluster_sizes(design.n, design.K))
    labels = labels[rng.permutation(design.n)]
    data = np.empty((design.n,) + design.dims)
    for k in range(design.K):
        idx = np.flatnonzero(labels == k)
        params = TnParams(truth.means[k].full(), truth.precisions[k].omegas)
        data[idx] = sample(params, rng, size=idx.size)
    return data, labels, truth
