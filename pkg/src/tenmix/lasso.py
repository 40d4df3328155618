"""Quadratic lasso ``min_b ½ b'Hb - v'b + pen·|b|_1`` by cyclic coordinate descent."""
from __future__ import annotations

import numpy as np


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def quad_lasso_cd(h, v, pen, b=None, tol=1e-13, max_sweeps=10000):
    """Coordinate descent for a positive-definite ``h``; ``b`` is a warm start
    and is updated in place when given."""
    b = np.zeros(v.size) if b is None else b
    diag = np.diag(h)
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(b.size):
            r = v[j] - h[j] @ b + diag[j] * b[j]
            new = np.sign(r) * max(abs(r) - pen, 0.0) / diag[j]
            delta = max(delta, abs(new - b[j]))
            b[j] = new
        if delta <= tol * max(1.0, np.abs(b).max()):
            break
    return b


def kkt_residual(h, v, pen, b):
    """Largest violation of the subgradient optimality conditions at ``b``."""
    g = h @ b - v
    nz = b != 0
    viol = np.where(nz, np.abs(g + pen * np.sign(b)), np.maximum(np.abs(g) - pen, 0.0))
    return float(viol.max(initial=0.0))
