"""CP decomposition by alternating least squares."""
from __future__ import annotations

import warnings

import numpy as np

from .errors import ArgumentError, DegenerateWarning
from .params import CpMean
from .tensor import unfold


def khatri_rao(mats):
    """Column-wise Kronecker product ``mats[-1] ⊙ ... ⊙ mats[0]``.

    Row ordering matches :func:`tenmix.tensor.unfold` (first index fastest).
    """
    out = mats[0]
    for a in mats[1:]:
        out = np.einsum("ir,jr->jir", out, a).reshape(-1, out.shape[1])
    return out


def _init_factors(u, R, rng):
    factors = []
    for m in range(u.ndim):
        left, _, _ = np.linalg.svd(unfold(u, m), full_matrices=False)
        f = left[:, :R]
        if f.shape[1] < R:
            f = np.hstack([f, rng.standard_normal((u.shape[m], R - f.shape[1]))])
        factors.append(f)
    return factors


def cp_als(u, R, iters=500, tol=1e-12, seed=0, return_errors=False):
    """Rank-``R`` CP decomposition of ``u``.

    Factors come back with unit-norm columns, weights nonnegative and sorted
    in descending order, and the sign convention of :meth:`CpMean.canonicalize`.
    Iteration stops when the relative reconstruction error changes by less than
    ``tol``. Ill-conditioned normal equations get a small ridge.
    """
    u = np.asarray(u, dtype=float)
    if R < 1:
        raise ArgumentError(f"rank must be positive, got {R}")
    M = u.ndim
    norm_u = np.linalg.norm(u)
    if norm_u == 0:
        warnings.warn("CP of a zero tensor: all weights are zero", DegenerateWarning, stacklevel=2)
        factors = [np.eye(d)[:, np.arange(R) % d] for d in u.shape]
        cp = CpMean(np.zeros(R), factors)
        return (cp, [0.0]) if return_errors else cp

    rng = np.random.default_rng(seed)
    factors = _init_factors(u, R, rng)
    unfoldings = [unfold(u, m) for m in range(M)]
    weights = np.ones(R)
    errors = []
    prev = np.inf
    for _ in range(iters):
        for m in range(M):
            others = [factors[j] for j in range(M) if j != m]
            gram = np.ones((R, R))
            for f in others:
                gram *= f.T @ f
            rhs = unfoldings[m] @ khatri_rao(others)
            if np.linalg.cond(gram) > 1e12:
                gram = gram + 1e-10 * np.trace(gram) / R * np.eye(R)
            f = np.linalg.solve(gram, rhs.T).T
            weights = np.linalg.norm(f, axis=0)
            weights[weights == 0] = 1.0
            factors[m] = f / weights
        approx = _full(weights, factors)
        err = np.linalg.norm(u - approx) / norm_u
        errors.append(err)
        if abs(prev - err) < tol:
            break
        prev = err

    order = np.argsort(-weights, kind="stable")
    cp = CpMean(weights[order], [f[:, order] for f in factors]).canonicalize()
    order = np.argsort(-cp.weights, kind="stable")
    cp = CpMean(cp.weights[order], [f[:, order] for f in cp.factors])
    return (cp, errors) if return_errors else cp


def _full(weights, factors):
    kr = khatri_rao(factors[1:]) if len(factors) > 1 else np.ones((1, weights.size))
    flat = (factors[0] * weights) @ kr.T
    return flat.reshape(tuple(f.shape[0] for f in factors), order="F")
