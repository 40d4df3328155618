"""Tensor normal distribution with separable covariance.

``vec(X) ~ N(vec(U), Σ_{M-1} ⊗ ... ⊗ Σ_0)``, parameterized by the per-mode
precisions ``Ω_m = Σ_m^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalRankError
from .tensor import _mode_dot, sym_inv_sqrt

LOG_2PI = np.log(2 * np.pi)


@dataclass
class TnParams:
    mean: np.ndarray
    precisions: list

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.precisions = [np.asarray(o, dtype=float) for o in self.precisions]
        if tuple(o.shape[0] for o in self.precisions) != self.mean.shape:
            raise ArgumentError(
                f"precision sizes {[o.shape for o in self.precisions]} "
                f"do not match mean dims {self.mean.shape}"
            )
        for m, o in enumerate(self.precisions):
            if o.shape[0] != o.shape[1] or np.abs(o - o.T).max() > 1e-10 * max(1.0, np.abs(o).max()):
                raise ArgumentError(f"precision for mode {m} is not square symmetric")


def _cholesky(o, mode):
    try:
        return np.linalg.cholesky(o)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(o)[0]
        raise NumericalRankError(
            f"precision for mode {mode} is not positive definite (min eigenvalue {w:.3e})",
            eigenvalue=w,
        ) from None


def whitening_factors(precisions):
    """Cholesky factors ``L_m`` (``Ω_m = L_m L_m^T``) and ``sum_m (d/d_m) log|Ω_m|``."""
    dims = [o.shape[0] for o in precisions]
    d = int(np.prod(dims))
    chols, logdet = [], 0.0
    for m, o in enumerate(precisions):
        L = _cholesky(o, m)
        chols.append(L)
        logdet += (d / dims[m]) * 2 * np.sum(np.log(np.diag(L)))
    return chols, logdet


def quadratic_forms(resid, chols):
    """``vec(E_i)^T (⊗Ω) vec(E_i)`` for a batch ``resid`` of shape ``(n, *dims)``."""
    w = resid
    for m, L in enumerate(chols):
        w = _mode_dot(w, L.T, m + 1)
    return np.sum(w.reshape(w.shape[0], -1) ** 2, axis=1)


def log_density_batch(xs, mean, precisions):
    """Log-density of every sample in ``xs`` (shape ``(n, *dims)``)."""
    xs = np.asarray(xs, dtype=float)
    mean = np.asarray(mean, dtype=float)
    if xs.shape[1:] != mean.shape:
        raise ArgumentError(f"sample dims {xs.shape[1:]} do not match mean dims {mean.shape}")
    chols, logdet = whitening_factors(precisions)
    d = mean.size
    q = quadratic_forms(xs - mean, chols)
    return -0.5 * d * LOG_2PI + 0.5 * logdet - 0.5 * q


def log_density(x, params):
    """Log-density of a single tensor ``x`` under ``params``."""
    x = np.asarray(x, dtype=float)
    if x.shape != params.mean.shape:
        raise ArgumentError(f"dims {x.shape} do not match mean dims {params.mean.shape}")
    return float(log_density_batch(x[None], params.mean, params.precisions)[0])


def sample(params, rng, size=None):
    """Draw ``U + Z ×_0 Σ_0^{1/2} ... ×_{M-1} Σ_{M-1}^{1/2}``.

    ``rng`` is a seed or a ``numpy.random.Generator``. With ``size=None`` a
    single tensor is returned, otherwise an array of shape ``(size, *dims)``.
    """
    rng = np.random.default_rng(rng)
    for m, o in enumerate(params.precisions):
        _cholesky(o, m)
    roots = [sym_inv_sqrt(o) for o in params.precisions]
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n,) + params.mean.shape)
    for m, s in enumerate(roots):
        z = _mode_dot(z, s, m + 1)
    out = params.mean + z
    return out[0] if size is None else out
