"""High-dimensional ECM estimation of the heterogeneous tensor mixture model.

One iteration runs an E-step, the proportion update, and then for every
cluster a ladder of conditional maximizations: for each rank-one term ``r``
the factor vectors ``β_{r,0..M-1}`` (sparse, via a quadratic lasso) followed
by the weight ``ω_r``; then the precisions ``Ω_0..Ω_{M-1}`` by graphical
lasso, renormalized so only the last mode carries the overall scale.
Parameters updated earlier in the ladder are used by every later update.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import glasso
from .cp import cp_als
from .errors import (
    ArgumentError,
    ConvergenceError,
    DeadFactorError,
    DegenerateWarning,
    DegeneracyError,
    TenmixError,
)
from .kmeans import kmeans
from .lasso import quad_lasso_cd
from .metrics import param_distance
from .params import CpMean, ModelParams, PrecisionSet, normalize_each
from .tensor import _mode_dot, sym_sqrt
from .tensor_normal import log_density_batch, quadratic_forms, whitening_factors

log = logging.getLogger(__name__)


@dataclass
class HecmConfig:
    K: int
    R: int
    lambda0: float = 0.0
    lambda1: float = 0.0
    max_iter: int = 20
    tol: float = 1e-4
    inner_repeats: int = 1
    responsibility_floor: float = 1e-6
    seed: int = 0
    n_restarts: int = 10
    kmeans_iter: int = 100
    glasso_tol: float = 1e-6
    glasso_max_iter: int = 200

    def __post_init__(self):
        if self.K < 1 or self.R < 1:
            raise ArgumentError(f"K and R must be positive, got K={self.K}, R={self.R}")
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise ArgumentError("penalties must be nonnegative")
        if self.max_iter < 1 or self.inner_repeats < 1 or self.tol <= 0:
            raise ArgumentError("max_iter, inner_repeats and tol must be positive")


@dataclass
class FitResult:
    theta: ModelParams
    tau: np.ndarray
    labels: np.ndarray
    trace: list
    converged: bool
    n_iter: int
    init_labels: np.ndarray | None = None
    notes: list = field(default_factory=list)

    @property
    def status(self):
        return "converged" if self.converged else "max_iter"


def as_data(data):
    """Stack a list of equally shaped tensors into an ``(n, *dims)`` array."""
    xs = np.asarray(data, dtype=float) if not isinstance(data, np.ndarray) else data.astype(float)
    if xs.ndim < 2 or xs.shape[0] == 0:
        raise ArgumentError("data must be a nonempty collection of tensors")
    return xs


# ---------------------------------------------------------------- E-step

def component_log_densities(xs, theta):
    """``log π_k + log f_k(X_i)`` as an ``(n, K)`` array."""
    out = np.empty((xs.shape[0], theta.K))
    with np.errstate(divide="ignore"):
        log_pis = np.log(theta.pis)
    for k in range(theta.K):
        out[:, k] = log_pis[k] + log_density_batch(
            xs, theta.means[k].full(), theta.precisions[k].omegas
        )
    return out


def responsibilities(logp):
    lse = logsumexp(logp, axis=1)
    bad = np.flatnonzero(~np.isfinite(lse))
    if bad.size:
        raise DegeneracyError(f"sample {bad[0]} has zero density under every component")
    tau = np.exp(logp - lse[:, None])
    return tau / tau.sum(axis=1, keepdims=True)


def e_step(data, theta):
    """Posterior cluster probabilities, an ``(n, K)`` row-stochastic matrix."""
    return responsibilities(component_log_densities(as_data(data), theta))


def mixture_loglik(data, theta):
    """``sum_i log sum_k π_k f_k(X_i)``."""
    return float(np.sum(logsumexp(component_log_densities(as_data(data), theta), axis=1)))


def complete_loglik(data, labels, theta):
    """Average complete-data log-likelihood; ``-inf`` if a label has zero weight."""
    xs = as_data(data)
    labels = np.asarray(labels, dtype=int)
    if labels.size != xs.shape[0]:
        raise ArgumentError("one label per sample is required")
    if labels.min() < 0 or labels.max() >= theta.K:
        raise ArgumentError(f"labels must lie in [0, {theta.K - 1}]")
    logp = component_log_densities(xs, theta)
    return float(np.mean(logp[np.arange(labels.size), labels]))


def update_pi(tau):
    tau = np.asarray(tau, dtype=float)
    pis = tau.sum(axis=0) / tau.shape[0]
    return pis / pis.sum()


# ------------------------------------------------------- mean updates

def residual_tensor(x, cp, r):
    """``x`` minus every rank-one term of ``cp`` except term ``r``."""
    out = np.array(x, dtype=float, copy=True)
    for q in range(cp.rank):
        if q != r:
            out -= cp.weights[q] * cp.term(q)
    return out


def _partial_target(xsum, n_k, cp, r):
    # Σ_i τ_ik (X_i - Σ_{q≠r} ω_q β_q) with xsum = Σ_i τ_ik X_i
    out = np.array(xsum, dtype=float, copy=True)
    for q in range(cp.rank):
        if q != r:
            out -= n_k * cp.weights[q] * cp.term(q)
    return out


def _weighted_total(xs, tau_k):
    return np.tensordot(tau_k, xs, axes=(0, 0))


def _check_mass(tau_k, floor=0.0):
    n_k = float(np.sum(tau_k))
    if not n_k > floor * tau_k.size:
        raise DegeneracyError(f"cluster is empty (total responsibility {n_k:.3g})")
    return n_k


def beta_subproblem(xsum, n_k, cp, omegas, r, m):
    """Quadratic coefficients ``(H, v)`` of the conditional objective in ``β_{r,m}``.

    The penalized conditional maximization equals
    ``min_b ½ b'Hb - v'b + n·λ0·|b|_1`` where ``xsum = Σ_i τ_ik X_i``.
    """
    M = len(omegas)
    z = _partial_target(xsum, n_k, cp, r)
    c = 1.0
    for j in range(M - 1, -1, -1):
        if j == m:
            continue
        w = omegas[j] @ cp.factors[j][:, r]
        c *= cp.factors[j][:, r] @ w
        z = np.tensordot(z, w, axes=(j, 0))
    omega_r = cp.weights[r]
    h = n_k * omega_r**2 * c * omegas[m]
    v = omega_r * (omegas[m] @ z)
    return h, v


def solve_beta(data, tau_k, cp, omegas, r, m, lambda0, floor=0.0):
    """Unnormalized maximizer of the penalized conditional objective in ``β_{r,m}``."""
    xs = as_data(data)
    tau_k = np.asarray(tau_k, dtype=float)
    n_k = _check_mass(tau_k, floor)
    return _solve_beta(_weighted_total(xs, tau_k), n_k, tau_k.size, cp, omegas, r, m, lambda0)


def _solve_beta(xsum, n_k, n, cp, omegas, r, m, lambda0):
    h, v = beta_subproblem(xsum, n_k, cp, omegas, r, m)
    if not np.all(np.diag(h) > 0):
        raise DeadFactorError(
            f"term {r} has zero weight, so factor {m} cannot be updated; try a smaller lambda0"
        )
    b = quad_lasso_cd(h, v, n * lambda0, cp.factors[m][:, r].copy())
    if not np.any(b):
        raise DeadFactorError(
            f"every entry of factor (term {r}, mode {m}) was thresholded to zero; "
            f"lambda0={lambda0:g} is too large"
        )
    return b


def update_beta(data, tau_k, cp, omegas, r, m, lambda0, floor=0.0):
    """Unit-norm update of ``β_{r,m}``."""
    b = solve_beta(data, tau_k, cp, omegas, r, m, lambda0, floor)
    return b / np.linalg.norm(b)


def _weight_ratio(xsum, n_k, cp, omegas, r):
    z = _partial_target(xsum, n_k, cp, r)
    denom = n_k
    for j in range(len(omegas) - 1, -1, -1):
        b = cp.factors[j][:, r]
        w = omegas[j] @ b
        denom *= b @ w
        z = np.tensordot(z, w, axes=(j, 0))
    if not denom > 0:
        raise DegeneracyError(f"weight update for term {r} has a zero denominator")
    return float(z) / denom


def update_weight(data, tau_k, cp, omegas, r):
    """Generalized least-squares weight of term ``r`` given everything else.

    Returns the raw ratio, which may be negative; :func:`fit` moves a negative
    sign into the mode-0 factor.
    """
    xs = as_data(data)
    tau_k = np.asarray(tau_k, dtype=float)
    return _weight_ratio(_weighted_total(xs, tau_k), _check_mass(tau_k), cp, omegas, r)


# -------------------------------------------------- precision updates

def build_scatter(data, tau_k, mean, omegas, m):
    """Weighted mode-``m`` scatter of residuals whitened along every other mode.

    ``S = d_m / (d n_k) Σ_i τ_ik X̄_i X̄_i'`` with ``X̄_i`` the mode-``m``
    unfolding of ``(X_i - U) ×_{m'≠m} Ω_{m'}^{1/2}``.
    """
    xs = as_data(data)
    tau_k = np.asarray(tau_k, dtype=float)
    n_k = _check_mass(tau_k)
    e = xs - mean
    for j, o in enumerate(omegas):
        if j != m:
            e = _mode_dot(e, sym_sqrt(o), j + 1)
    dims = xs.shape[1:]
    d = int(np.prod(dims))
    em = np.moveaxis(e * np.sqrt(tau_k).reshape((-1,) + (1,) * len(dims)), m + 1, 0)
    em = em.reshape(dims[m], -1)
    s = (dims[m] / (d * n_k)) * (em @ em.T)
    return (s + s.T) / 2


def compute_eta(data, tau_k, mean, omegas):
    """Overall precision scale ``η = n_k d / Σ_i τ_ik vec(E_i)'(⊗Ω)vec(E_i)``."""
    xs = as_data(data)
    tau_k = np.asarray(tau_k, dtype=float)
    n_k = _check_mass(tau_k)
    chols, _ = whitening_factors(omegas)
    denom = float(tau_k @ quadratic_forms(xs - mean, chols))
    eta = n_k * mean.size / denom if denom > 0 else np.inf
    if not np.isfinite(eta) or eta <= 0:
        raise DegeneracyError(f"precision scale is not finite and positive (denominator {denom:g})")
    return eta


def update_precisions(data, tau_k, mean, omegas, lambda1, tol=1e-6, max_iter=200, warm=True):
    """Graphical-lasso update of every mode, then the identifiability rescaling.

    Mode ``m`` uses already-updated (normalized) precisions for modes ``< m``
    and the incoming ones for modes ``> m``. The glasso penalty is
    ``lambda1 · d_m · n / n_k``.
    """
    xs = as_data(data)
    tau_k = np.asarray(tau_k, dtype=float)
    n_k = _check_mass(tau_k)
    n = tau_k.size
    current = [np.array(o, dtype=float) for o in omegas]
    for m in range(len(current)):
        s = build_scatter(xs, tau_k, mean, current, m)
        lam = lambda1 * s.shape[0] * n / n_k
        try:
            problem = glasso.GlassoProblem(s, lam, tol=tol, max_iter=max_iter)
            raw = glasso.solve(problem, omega_init=current[m] if warm else None)
        except ConvergenceError as exc:
            raise ConvergenceError(f"mode {m}: {exc}", residual=exc.residual) from exc
        except ArgumentError as exc:
            raise DegeneracyError(f"mode {m}: scatter matrix is degenerate ({exc})") from exc
        current[m] = normalize_each([raw])[0]
    current[-1] = current[-1] * compute_eta(xs, tau_k, mean, current)
    return current


# ------------------------------------------------------------ ladder

def _update_cluster(xs, tau_k, cp, omegas, cfg):
    n = xs.shape[0]
    n_k = _check_mass(tau_k, cfg.responsibility_floor)
    xsum = _weighted_total(xs, tau_k)
    cp = cp.copy()
    omegas = [o.copy() for o in omegas]
    for _ in range(cfg.inner_repeats):
        for r in range(cp.rank):
            for m in range(len(omegas)):
                b = _solve_beta(xsum, n_k, n, cp, omegas, r, m, cfg.lambda0)
                cp.factors[m][:, r] = b / np.linalg.norm(b)
            cp.weights[r] = _weight_ratio(xsum, n_k, cp, omegas, r)
            _canonical_term(cp, r)
        omegas = update_precisions(
            xs, tau_k, cp.full(), omegas, cfg.lambda1, cfg.glasso_tol, cfg.glasso_max_iter
        )
    return cp, omegas


def _canonical_term(cp, r):
    for f in cp.factors[1:]:
        col = f[:, r]
        if col[np.argmax(np.abs(col))] < 0:
            col *= -1
            cp.factors[0][:, r] *= -1
    if cp.weights[r] < 0:
        cp.weights[r] = -cp.weights[r]
        cp.factors[0][:, r] *= -1


def penalty(theta, lambda0, lambda1):
    """Penalty in per-sample log-likelihood units.

    The precision update scales its objective by ``2/d`` relative to the
    log-likelihood, so ``lambda1`` enters here multiplied by ``d/2``.
    """
    d = int(np.prod(theta.dims))
    pen = 0.0
    for cp, ps in zip(theta.means, theta.precisions):
        pen += lambda0 * sum(np.abs(f).sum() for f in cp.factors)
        off = sum(np.abs(o).sum() - np.abs(np.diag(o)).sum() for o in ps.omegas)
        pen += 0.5 * d * lambda1 * off
    return float(pen)


# ---------------------------------------------------- initialization

def _mode_scatter_inverse(resid, m):
    d_m = resid.shape[m + 1]
    em = np.moveaxis(resid, m + 1, 1).reshape(resid.shape[0], d_m, -1)
    s = np.einsum("iaj,ibj->ab", em, em) / resid.shape[0]
    if resid.shape[0] <= d_m:
        s = s + 1e-3 * np.trace(s) / d_m * np.eye(d_m)
    return np.linalg.inv((s + s.T) / 2)


def initialize(data, cfg):
    """Starting parameters from k-means on the vectorized samples.

    Returns ``(theta, labels)``. Means get a rank-``R`` CP decomposition; each
    precision is the inverse mode-wise residual scatter, then normalized.
    """
    xs = as_data(data)
    n = xs.shape[0]
    if n < cfg.K:
        raise ArgumentError(f"need at least K={cfg.K} samples, got {n}")
    labels, _, _ = kmeans(xs.reshape(n, -1), cfg.K, cfg.n_restarts, cfg.kmeans_iter, cfg.seed)
    counts = np.bincount(labels, minlength=cfg.K)
    if counts.min() < 2:
        raise DegeneracyError(
            f"k-means produced a cluster with {counts.min()} sample(s); try a smaller K"
        )
    means, precs = [], []
    for k in range(cfg.K):
        members = xs[labels == k]
        u = members.mean(axis=0)
        cp = cp_als(u, cfg.R, seed=cfg.seed)
        if np.any(cp.weights == 0):
            raise DegeneracyError(f"initial mean of cluster {k} has CP weights equal to zero")
        resid = members - u
        omegas = normalize_each([_mode_scatter_inverse(resid, m) for m in range(xs.ndim - 1)])
        onehot = (labels == k).astype(float)
        omegas[-1] = omegas[-1] * compute_eta(xs, onehot, cp.full(), omegas)
        means.append(cp)
        precs.append(PrecisionSet(omegas))
    return ModelParams(counts / n, means, precs), labels


# ---------------------------------------------------------------- fit

def _reseed(xs, tau, theta, k, cfg):
    i = int(np.argmin(tau.max(axis=1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateWarning)
        cp = cp_als(xs[i], cfg.R, seed=cfg.seed)
    return i, cp


def fit(data, cfg, init=None, callback=None):
    """Run the HECM iterations.

    ``init`` skips the k-means initialization. ``callback(t, theta, tau)`` is
    called after every iteration with the new parameters and the
    responsibilities that produced them. Hitting ``max_iter`` is reported
    through ``FitResult.converged``, not raised.
    """
    xs = as_data(data)
    n = xs.shape[0]
    if n < cfg.K:
        raise ArgumentError(f"need at least K={cfg.K} samples, got {n}")
    init_labels = None
    if init is None:
        theta, init_labels = initialize(xs, cfg)
    else:
        theta = init.copy()
        if theta.K != cfg.K or theta.dims != xs.shape[1:]:
            raise ArgumentError("initial parameters do not match K or the data dims")
    logp = component_log_densities(xs, theta)
    trace, notes = [], []
    converged = False
    t = 0
    for t in range(1, cfg.max_iter + 1):
        try:
            tau = responsibilities(logp)
            new = theta.copy()
            new.pis = update_pi(tau)
            for k in range(cfg.K):
                if new.pis[k] < cfg.responsibility_floor:
                    i, cp = _reseed(xs, tau, theta, k, cfg)
                    new.means[k] = cp
                    new.pis[k] = 1.0 / n
                    notes.append(f"iteration {t}: cluster {k} reseeded from sample {i}")
                    continue
                try:
                    cp, omegas = _update_cluster(
                        xs, tau[:, k], theta.means[k], theta.precisions[k].omegas, cfg
                    )
                except TenmixError as exc:
                    exc.args = (f"cluster {k}: {exc.args[0]}",) + exc.args[1:]
                    raise
                new.means[k] = cp
                new.precisions[k] = PrecisionSet(omegas)
            new.pis = new.pis / new.pis.sum()
            logp = component_log_densities(xs, new)
        except TenmixError as exc:
            exc.args = (f"iteration {t}: {exc.args[0]}",) + exc.args[1:]
            exc.iteration = t
            raise
        try:
            dist = param_distance(new, theta)
        except ArgumentError:
            dist = np.inf
        ll = float(np.mean(logsumexp(logp, axis=1)))
        trace.append({
            "iteration": t,
            "loglik": ll,
            "penalized_loglik": ll - penalty(new, cfg.lambda0, cfg.lambda1),
            "distance": dist,
        })
        log.debug("iteration %d: loglik %.6f distance %.3e", t, ll, dist)
        theta = new
        if callback is not None:
            callback(t, theta, tau)
        if dist < cfg.tol:
            converged = True
            break
    tau = responsibilities(logp)
    return FitResult(
        theta=theta,
        tau=tau,
        labels=np.argmax(tau, axis=1),
        trace=trace,
        converged=converged,
        n_iter=t,
        init_labels=init_labels,
        notes=notes,
    )
