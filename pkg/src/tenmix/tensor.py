"""Dense tensor algebra.

Tensors are plain numpy arrays. The vectorization convention is column-major:
the first index varies fastest, so ``vec(x)`` is ``x.reshape(-1, order="F")``
and the mode-m unfolding orders its columns with the first remaining index
fastest. Modes are 0-based, like numpy axes.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import ArgumentError, NumericalRankError

__all__ = [
    "vec",
    "unvec",
    "unfold",
    "fold",
    "mode_product",
    "multi_mode_product",
    "outer_product",
    "kronecker",
    "kron_chain",
    "inner",
    "frobenius_norm",
    "max_norm",
    "sym_sqrt",
    "sym_inv_sqrt",
]


def _check_mode(mode, ndim):
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode < ndim:
        raise ArgumentError(f"mode {mode!r} out of range for an order-{ndim} tensor")


def vec(x):
    """Stack the mode-0 fibers of ``x`` into a vector."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, dims):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    dims = tuple(int(d) for d in dims)
    if v.size != int(np.prod(dims)):
        raise ArgumentError(f"vector of length {v.size} cannot be reshaped to {dims}")
    return v.reshape(dims, order="F")


def unfold(x, mode):
    """Mode-``mode`` unfolding: a ``d_mode x (d / d_mode)`` matrix of fibers."""
    x = np.asarray(x)
    if x.ndim == 1 and mode == 0:
        return x.reshape(-1, 1)
    _check_mode(mode, x.ndim)
    return np.moveaxis(x, mode, 0).reshape(x.shape[mode], -1, order="F")


def fold(m, mode, dims):
    """Inverse of :func:`unfold`."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    _check_mode(mode, len(dims))
    rest = dims[:mode] + dims[mode + 1:]
    if m.ndim != 2 or m.shape != (dims[mode], int(np.prod(rest))):
        raise ArgumentError(
            f"matrix of shape {m.shape} does not unfold a {dims} tensor at mode {mode}"
        )
    return np.moveaxis(m.reshape((dims[mode],) + rest, order="F"), 0, mode)


def _mode_dot(x, a, axis):
    # Multiplies every fiber along ``axis`` by ``a``; ``axis`` may be offset by batch axes.
    return np.moveaxis(np.tensordot(a, x, axes=(1, axis)), 0, axis)


def mode_product(x, a, mode):
    """Compute ``x ×_mode a``.

    The result satisfies ``unfold(result, mode) == a @ unfold(x, mode)``.
    """
    x = np.asarray(x)
    a = np.asarray(a)
    _check_mode(mode, x.ndim)
    if a.ndim != 2 or a.shape[1] != x.shape[mode]:
        raise ArgumentError(
            f"matrix of shape {a.shape} cannot multiply mode {mode} of size {x.shape[mode]}"
        )
    return _mode_dot(x, a, mode)


def multi_mode_product(x, mats):
    """Compute ``x ×_0 mats[0] ×_1 ... ×_{M-1} mats[M-1]``.

    ``None`` entries skip a mode.
    """
    x = np.asarray(x)
    if len(mats) != x.ndim:
        raise ArgumentError(f"expected {x.ndim} matrices, got {len(mats)}")
    for mode, a in enumerate(mats):
        if a is not None:
            x = mode_product(x, a, mode)
    return x


def outer_product(vecs):
    """Outer product ``v_0 ∘ v_1 ∘ ... ∘ v_{M-1}``."""
    if len(vecs) == 0:
        raise ArgumentError("outer_product needs at least one vector")
    vecs = [np.asarray(v, dtype=float).ravel() for v in vecs]
    out = vecs[0]
    for v in vecs[1:]:
        out = np.multiply.outer(out, v)
    return out


def kronecker(a, b):
    """Standard Kronecker product."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_chain(mats):
    """``mats[-1] ⊗ ... ⊗ mats[0]``, the matrix acting on ``vec`` of a tensor.

    ``vec(multi_mode_product(x, mats)) == kron_chain(mats) @ vec(x)``.
    """
    return reduce(np.kron, [np.asarray(m) for m in reversed(mats)])


def inner(x, y):
    """Sum of elementwise products."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ArgumentError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.vdot(x, y))


def frobenius_norm(x):
    return float(np.linalg.norm(np.asarray(x).ravel()))


def max_norm(x):
    return float(np.max(np.abs(x)))


def _sym_eig(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise ArgumentError("matrix is not symmetric")
    w, v = np.linalg.eigh((a + a.T) / 2)
    floor = 1e-10 * max(w[-1], 0.0)
    if w[0] < -floor or w[-1] <= 0:
        raise NumericalRankError(
            f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})", eigenvalue=w[0]
        )
    return np.maximum(w, floor), v


def sym_sqrt(a):
    """Symmetric square root of a positive (semi)definite matrix.

    Eigenvalues below ``1e-10 * max eigenvalue`` are clamped to that floor;
    eigenvalues more negative than ``-floor`` raise :class:`NumericalRankError`.
    """
    w, v = _sym_eig(a)
    return (v * np.sqrt(w)) @ v.T


def sym_inv_sqrt(a):
    """Symmetric square root of the inverse, with the same clamping as :func:`sym_sqrt`."""
    w, v = _sym_eig(a)
    return (v / np.sqrt(w)) @ v.T
