"""Dense reference computations for the conditional updates.

Everything here works on vectorized tensors and explicit Kronecker matrices,
so it shares no code path with the mode-wise implementations under test.
"""
import warnings

import numpy as np
from scipy.linalg import sqrtm
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso

from conftest import dense_kron


def fvec(x):
    return np.asarray(x).reshape(-1, order="F")


def rank_one(vecs):
    return dense_kron([np.asarray(v)[:, None] for v in vecs]).ravel()


def other_terms(cp, r):
    """vec of Σ_{q≠r} ω_q β_q1 ∘ ... ∘ β_qM."""
    out = 0.0
    for q in range(cp.rank):
        if q != r:
            out = out + cp.weights[q] * rank_one([f[:, q] for f in cp.factors])
    return out


def factor_design(cp, r, m):
    """Matrix A with vec(term r with β_{r,m} replaced by b) = A b."""
    d_m = cp.factors[m].shape[0]
    cols = []
    for j in range(d_m):
        vecs = [f[:, r] for f in cp.factors]
        vecs[m] = np.eye(d_m)[j]
        cols.append(rank_one(vecs))
    return np.stack(cols, axis=1)


def beta_oracle(xs, tau_k, cp, omegas, r, m, lambda0):
    """Unit-norm minimizer of Σ_i τ_i ½|rest_i - ω A b|²_Ω + n λ0 |b|_1,
    solved by the scikit-learn coordinate-descent lasso."""
    n = xs.shape[0]
    om = dense_kron(omegas)
    a = factor_design(cp, r, m)
    w = cp.weights[r]
    rest = np.stack([fvec(x) for x in xs]) - other_terms(cp, r)
    n_k = tau_k.sum()
    h = n_k * w**2 * a.T @ om @ a
    v = w * a.T @ om @ (tau_k @ rest)
    # ½b'Hb - v'b = ½|L'b - L⁻¹v|² + const, and sklearn divides the loss by the row count
    if lambda0 == 0:
        b = np.linalg.solve(h, v)
        return b / np.linalg.norm(b), v
    l = np.linalg.cholesky(h)
    d_m = h.shape[0]
    fit = Lasso(alpha=n * lambda0 / d_m, fit_intercept=False, tol=1e-16, max_iter=1_000_000)
    with warnings.catch_warnings():
        # the duality-gap target sits at rounding level; the solution is already exact
        warnings.simplefilter("ignore", ConvergenceWarning)
        b = fit.fit(l.T, np.linalg.solve(l, v)).coef_
    return b / np.linalg.norm(b), v


def weight_oracle(xs, tau_k, cp, omegas, r):
    om = dense_kron(omegas)
    a = rank_one([f[:, r] for f in cp.factors])
    rest = np.stack([fvec(x) for x in xs]) - other_terms(cp, r)
    return float(a @ om @ (tau_k @ rest)) / (tau_k.sum() * (a @ om @ a))


def scatter_oracle(xs, tau_k, mean, omegas, m):
    dims = xs.shape[1:]
    d = int(np.prod(dims))
    roots = [np.eye(dims[j]) if j == m else np.real(sqrtm(o)) for j, o in enumerate(omegas)]
    big = dense_kron(roots)
    s = np.zeros((dims[m], dims[m]))
    for x, t in zip(xs, tau_k):
        e = (big @ fvec(x - mean)).reshape(dims, order="F")
        em = np.moveaxis(e, m, 0).reshape(dims[m], -1, order="F")
        s += t * em @ em.T
    return dims[m] / (d * tau_k.sum()) * s


def eta_oracle(xs, tau_k, mean, omegas):
    om = dense_kron(omegas)
    q = np.array([fvec(x - mean) @ om @ fvec(x - mean) for x in xs])
    return tau_k.sum() * mean.size / (tau_k @ q)


def random_instance(rng):
    """Random small conditional-update problem with dims ≤ 6 and R ≤ 2."""
    from tenmix.params import CpMean, identifiable
    from conftest import random_spd

    M = int(rng.integers(2, 4))
    dims = tuple(int(d) for d in rng.integers(2, 7, M))
    R = int(rng.integers(1, 3))
    K = int(rng.integers(1, 3))
    n = int(rng.integers(6, 20))
    fs = [rng.standard_normal((d, R)) for d in dims]
    fs = [f / np.linalg.norm(f, axis=0) for f in fs]
    cp = CpMean(rng.uniform(1.0, 4.0, R), fs)
    omegas = identifiable([random_spd(rng, d, cond=3.0) for d in dims])
    xs = cp.full() + rng.standard_normal((n,) + dims)
    tau = rng.dirichlet(np.ones(K), size=n)
    return xs, tau[:, int(rng.integers(K))], cp, omegas
