"""Graphical lasso by block coordinate descent over columns.

Solves ``min_Ω -log|Ω| + tr(SΩ) + λ Σ_{i≠j} |Ω_ij|`` (diagonal unpenalized).
Each column subproblem is a lasso solved by cyclic coordinate descent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConvergenceError, NumericalRankError
from .lasso import quad_lasso_cd

ZERO_TOL = 0.0


@dataclass
class GlassoProblem:
    s: np.ndarray
    lam: float
    tol: float = 1e-6
    max_iter: int = 200

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if self.s.ndim != 2 or self.s.shape[0] != self.s.shape[1]:
            raise ArgumentError(f"S must be square, got {self.s.shape}")
        if np.abs(self.s - self.s.T).max() > 1e-10 * max(1.0, np.abs(self.s).max()):
            raise ArgumentError("S is not symmetric")
        if not self.lam >= 0:
            raise ArgumentError(f"penalty must be nonnegative, got {self.lam}")
        if np.any(np.diag(self.s) <= 0):
            raise ArgumentError("S must have a positive diagonal")


def objective(omega, p):
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return np.inf
    off = np.abs(omega).sum() - np.abs(np.diag(omega)).sum()
    return -logdet + np.sum(p.s * omega) + p.lam * off


def kkt_residual(omega, p):
    """Largest violation of the stationarity conditions at ``omega``.

    Off the diagonal, ``W = Ω^{-1}`` must satisfy ``W_ij - S_ij = λ sign(Ω_ij)``
    where ``Ω_ij ≠ 0`` and ``|W_ij - S_ij| <= λ`` elsewhere; on the diagonal
    ``W_ii = S_ii``.
    """
    omega = np.asarray(omega, dtype=float)
    w = np.linalg.inv(omega)
    g = w - p.s
    nz = np.abs(omega) > ZERO_TOL
    off = ~np.eye(omega.shape[0], dtype=bool)
    active = np.abs(g - p.lam * np.sign(omega))
    inactive = np.maximum(np.abs(g) - p.lam, 0.0)
    viol = np.where(nz, active, inactive)[off]
    diag = np.abs(np.diag(g))
    return float(max(viol.max(initial=0.0), diag.max()))


def solve(p, omega_init=None, inner_tol=1e-8, trace=None):
    """Solve a :class:`GlassoProblem`.

    ``omega_init`` warm-starts the working covariance; it is ignored if the
    implied start is not positive definite. When ``trace`` is a list, the KKT
    residual after every sweep is appended to it.
    """
    s = p.s
    n = s.shape[0]
    if n == 1:
        return np.array([[1.0 / s[0, 0]]])
    if p.lam == 0:
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise NumericalRankError("S is singular and λ = 0") from None
        omega = np.linalg.inv(s)
        return (omega + omega.T) / 2

    w = None
    if omega_init is not None:
        w = np.linalg.inv(np.asarray(omega_init, dtype=float))
        w *= np.trace(s) / np.trace(w)
        np.fill_diagonal(w, np.diag(s))
        try:
            np.linalg.cholesky(w)
        except np.linalg.LinAlgError:
            w = None
    if w is None:
        w = s.copy()
        off = ~np.eye(n, dtype=bool)
        # shrink toward the diagonal so the start is well inside the PD cone
        w[off] = np.sign(s[off]) * np.maximum(np.abs(s[off]) - p.lam, 0.0)
        try:
            np.linalg.cholesky(w)
        except np.linalg.LinAlgError:
            w = np.diag(np.diag(s))

    betas = np.zeros((n, n - 1))
    idx = np.arange(n)
    resid = np.inf
    for _ in range(p.max_iter):
        for j in range(n):
            rest = idx != j
            w11 = w[np.ix_(rest, rest)]
            beta = quad_lasso_cd(w11, s[rest, j], p.lam, betas[j], inner_tol * 1e-2)
            w12 = w11 @ beta
            w[rest, j] = w12
            w[j, rest] = w12
        omega = _assemble(w, betas)
        try:
            resid = kkt_residual(omega, p)
        except np.linalg.LinAlgError:
            raise NumericalRankError("glasso iterate became singular") from None
        if trace is not None:
            trace.append(resid)
        if resid <= p.tol:
            break
    else:
        raise ConvergenceError(
            f"glasso did not reach KKT residual {p.tol:g} in {p.max_iter} sweeps "
            f"(residual {resid:.3e})",
            residual=resid,
        )
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        raise NumericalRankError("glasso solution is not positive definite") from None
    return omega


def _assemble(w, betas):
    n = w.shape[0]
    idx = np.arange(n)
    omega = np.zeros((n, n))
    for j in range(n):
        rest = idx != j
        b = betas[j]
        theta_jj = 1.0 / (w[j, j] - w[rest, j] @ b)
        omega[j, j] = theta_jj
        omega[rest, j] = -b * theta_jj
    # keep an off-diagonal entry only if both column solutions select it
    zero = (omega == 0) | (omega.T == 0)
    omega = (omega + omega.T) / 2
    omega[zero] = 0.0
    return omega
