import numpy as np
import pytest
from scipy.stats import multivariate_normal

from tenmix import hecm
from tenmix.errors import ArgumentError, DeadFactorError, DegeneracyError
from tenmix.hecm import HecmConfig
from tenmix.metrics import clustering_error
from tenmix.params import CpMean, ModelParams, PrecisionSet, check_invariants
from tenmix.simulation import SimDesign, generate, true_params
from tenmix.tensor import outer_product
from tenmix.tensor_normal import log_density, TnParams

import oracles
from conftest import dense_kron, random_spd


def _theta(rng, dims=(2, 2, 2), K=2, R=1):
    means = [CpMean(rng.uniform(1, 3, R), [np.linalg.qr(rng.standard_normal((d, R)))[0]
                                            for d in dims]) for _ in range(K)]
    precs = [PrecisionSet([random_spd(rng, d) for d in dims]) for _ in range(K)]
    return ModelParams(rng.dirichlet(np.ones(K)), means, precs)


# ---------------------------------------------------------------- E-step

def test_e_step_density_ratio(rng):
    theta = _theta(rng)
    xs = rng.standard_normal((5, 2, 2, 2)) * 2
    tau = hecm.e_step(xs, theta)
    for i, x in enumerate(xs):
        dens = [theta.pis[k] * multivariate_normal(
            oracles.fvec(theta.means[k].full()),
            np.linalg.inv(dense_kron(theta.precisions[k].omegas))).pdf(oracles.fvec(x))
            for k in range(2)]
        np.testing.assert_allclose(tau[i], np.array(dens) / sum(dens), atol=1e-10)


def test_e_step_symmetry_and_degenerate_pi(rng):
    theta = _theta(rng)
    theta.means[1] = theta.means[0].copy()
    theta.precisions[1] = theta.precisions[0].copy()
    theta.pis = np.array([0.5, 0.5])
    xs = rng.standard_normal((4, 2, 2, 2))
    np.testing.assert_allclose(hecm.e_step(xs, theta), 0.5)
    theta.pis = np.array([1.0, 0.0])
    np.testing.assert_array_equal(hecm.e_step(xs, theta)[:, 0], 1.0)
    # a label on an empty component is -inf, not an error
    assert hecm.complete_loglik(xs, [0, 1, 0, 0], theta) == -np.inf


def test_mixture_loglik_direct_sum(rng):
    theta = _theta(rng)
    xs = rng.standard_normal((2, 2, 2, 2))
    want = sum(np.log(sum(theta.pis[k] * np.exp(log_density(
        x, TnParams(theta.means[k].full(), theta.precisions[k].omegas))) for k in range(2)))
        for x in xs)
    assert np.isclose(hecm.mixture_loglik(xs, theta), want, rtol=1e-12)
    one = ModelParams([1.0], theta.means[:1], theta.precisions[:1])
    dens = [log_density(x, TnParams(one.means[0].full(), one.precisions[0].omegas)) for x in xs]
    assert np.isclose(hecm.complete_loglik(xs, [0, 0], one), np.mean(dens))


def test_update_pi(rng):
    tau = np.zeros((5, 3))
    tau[:, 0] = 1
    np.testing.assert_array_equal(hecm.update_pi(tau), [1, 0, 0])
    np.testing.assert_allclose(hecm.update_pi(np.full((4, 4), 0.25)), 0.25)
    tau = rng.dirichlet(np.ones(3), size=7)
    np.testing.assert_allclose(hecm.update_pi(tau), tau.mean(axis=0))


def test_responsibilities_zero_density():
    with pytest.raises(DegeneracyError, match="sample 1"):
        hecm.responsibilities(np.array([[0.0, -1.0], [-np.inf, -np.inf]]))


# ------------------------------------------------------- mean updates

def test_residual_tensor(rng):
    fs = [rng.standard_normal((d, 2)) for d in (2, 3, 2)]
    cp = CpMean(np.array([2.0, 3.0]), fs)
    x = rng.standard_normal((2, 3, 2))
    one = CpMean(cp.weights[:1], [f[:, :1] for f in fs])
    np.testing.assert_array_equal(hecm.residual_tensor(x, one, 0), x)
    np.testing.assert_allclose(hecm.residual_tensor(cp.full(), cp, 1), 3.0 * cp.term(1))
    want = x - 2.0 * outer_product([f[:, 0] for f in fs])
    np.testing.assert_allclose(hecm.residual_tensor(x, cp, 1), want)


def test_update_beta_least_squares(rng):
    dims = (4, 3, 5)
    fs = [rng.standard_normal((d, 1)) for d in dims]
    fs = [f / np.linalg.norm(f) for f in fs]
    cp = CpMean([2.0], fs)
    xs = rng.standard_normal((6,) + dims)
    omegas = [np.eye(d) for d in dims]
    b = hecm.update_beta(xs, np.ones(6), cp, omegas, 0, 1, 0.0)
    direct = np.einsum("nijk,i,k->j", xs, fs[0][:, 0], fs[2][:, 0])
    np.testing.assert_allclose(b, direct / np.linalg.norm(direct), atol=1e-12)


def test_update_beta_dead_factor(rng):
    xs, tau, cp, omegas = oracles.random_instance(rng)
    _, v = oracles.beta_oracle(xs, tau, cp, omegas, 0, 0, 0.0)
    lam = 1.01 * np.abs(v).max() / xs.shape[0]
    with pytest.raises(DeadFactorError):
        hecm.update_beta(xs, tau, cp, omegas, 0, 0, lam)


def test_update_beta_recovers_support():
    rng = np.random.default_rng(7)
    dims = (10, 4, 4)
    true = np.zeros(10)
    true[:3] = 1 / np.sqrt(3)
    others = [np.ones(4) / 2, np.ones(4) / 2]
    signal = 8 * outer_product([true] + others)
    xs = signal + 0.3 * rng.standard_normal((50,) + dims)
    start = CpMean([8.0], [np.ones((10, 1)) / np.sqrt(10)] + [o[:, None] for o in others])
    b = hecm.update_beta(xs, np.ones(50), start, [np.eye(d) for d in dims], 0, 0, 1.5)
    np.testing.assert_array_equal(np.flatnonzero(b), [0, 1, 2])


def test_update_beta_matches_dense_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        xs, tau, cp, omegas = oracles.random_instance(rng)
        r = int(rng.integers(cp.rank))
        m = int(rng.integers(len(omegas)))
        _, v = oracles.beta_oracle(xs, tau, cp, omegas, r, m, 0.0)
        lam = rng.uniform(0, 0.5) * np.abs(v).max() / xs.shape[0]
        want, _ = oracles.beta_oracle(xs, tau, cp, omegas, r, m, lam)
        got = hecm.update_beta(xs, tau, cp, omegas, r, m, lam)
        assert np.abs(got - want).max() < 1e-6


def test_update_weight_examples(rng):
    beta = rng.standard_normal(3)
    beta /= np.linalg.norm(beta)
    cp = CpMean([1.0], [beta[:, None]] * 3)
    x = 3 * outer_product([beta] * 3)
    eye = [np.eye(3)] * 3
    assert np.isclose(hecm.update_weight(x[None], np.ones(1), cp, eye, 0), 3.0)
    perp = np.linalg.qr(np.column_stack([beta, rng.standard_normal(3)]))[0][:, 1]
    x = outer_product([perp, beta, beta])
    assert abs(hecm.update_weight(x[None], np.ones(1), cp, eye, 0)) < 1e-14


def test_update_weight_matches_dense_oracle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        xs, tau, cp, omegas = oracles.random_instance(rng)
        r = int(rng.integers(cp.rank))
        want = oracles.weight_oracle(xs, tau, cp, omegas, r)
        assert abs(hecm.update_weight(xs, tau, cp, omegas, r) - want) <= 1e-10 * max(1, abs(want))


# -------------------------------------------------- precision updates

def test_build_scatter_examples(rng):
    dims = (3, 2, 2)
    mean = rng.standard_normal(dims)
    omegas = [random_spd(rng, d) for d in dims]
    np.testing.assert_array_equal(
        hecm.build_scatter(np.stack([mean] * 3), np.ones(3), mean, omegas, 0), 0.0)
    xs = rng.standard_normal((4,) + dims)
    e = np.moveaxis(xs - mean, 2, 1).reshape(4, 2, -1)
    want = 2 / (12 * 4) * np.einsum("iaj,ibj->ab", e, e)
    got = hecm.build_scatter(xs, np.ones(4), mean, [np.eye(d) for d in dims], 1)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_scatter_and_eta_match_dense_oracles():
    rng = np.random.default_rng(3)
    for _ in range(10):
        xs, tau, cp, omegas = oracles.random_instance(rng)
        mean = cp.full()
        for m in range(len(omegas)):
            want = oracles.scatter_oracle(xs, tau, mean, omegas, m)
            got = hecm.build_scatter(xs, tau, mean, omegas, m)
            assert np.abs(got - want).max() < 1e-9
        want = oracles.eta_oracle(xs, tau, mean, omegas)
        assert abs(hecm.compute_eta(xs, tau, mean, omegas) - want) < 1e-9 * want


def test_update_precisions_consistent_at_large_n():
    rng = np.random.default_rng(4)
    dims = (4, 3, 3)
    xs = rng.standard_normal((5000,) + dims)
    out = hecm.update_precisions(xs, np.ones(5000), np.zeros(dims),
                                 [np.eye(d) for d in dims], 1e-4)
    for o in out:
        assert np.linalg.norm(o - np.eye(o.shape[0])) / np.sqrt(o.shape[0]) < 0.1


def test_update_precisions_zero_residual(rng):
    mean = rng.standard_normal((2, 2, 2))
    with pytest.raises(DegeneracyError):
        hecm.update_precisions(np.stack([mean] * 4), np.ones(4), mean,
                               [np.eye(2)] * 3, 0.01)


# ------------------------------------------------------------ fit

def _two_clusters(n=200, seed=0):
    return generate(SimDesign(n=n, dims=(5, 5, 5), K=2, R=1, mu=0.85, nu=0.3, seed=seed))


def test_fit_recovers_two_clusters():
    data, labels, truth = _two_clusters()
    res = hecm.fit(data, HecmConfig(K=2, R=1, lambda0=0.05, lambda1=0.001, seed=1))
    assert clustering_error(res.labels, labels) < 0.05
    assert res.status == "converged"


def test_fit_is_deterministic_and_keeps_invariants():
    data, _, _ = _two_clusters(seed=5)
    cfg = HecmConfig(K=2, R=1, lambda0=0.05, lambda1=0.001, seed=3, max_iter=5)
    seen = []

    def cb(t, theta, tau):
        seen.append(check_invariants(theta, tau))

    a = hecm.fit(data, cfg, callback=cb)
    b = hecm.fit(data, cfg)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.theta.means[0].full(), b.theta.means[0].full())
    assert seen and all(v == [] for v in seen)
    assert [r["iteration"] for r in a.trace] == list(range(1, a.n_iter + 1))


def test_unpenalized_fit_increases_likelihood():
    data, _, _ = _two_clusters(seed=2)
    res = hecm.fit(data, HecmConfig(K=2, R=1, seed=0, max_iter=8, tol=1e-12))
    ll = [r["loglik"] for r in res.trace]
    assert np.all(np.diff(ll) >= -1e-8)


def test_fit_single_cluster():
    data, _, _ = _two_clusters(n=60)
    res = hecm.fit(data, HecmConfig(K=1, R=2, lambda0=0.01, lambda1=0.001))
    assert np.all(res.labels == 0) and res.theta.K == 1


def test_fit_from_truth_and_errors():
    data, labels, truth = _two_clusters()
    res = hecm.fit(data, HecmConfig(K=2, R=1, lambda0=0.05, lambda1=0.001), init=truth)
    assert res.init_labels is None
    assert clustering_error(res.labels, labels) < 0.05
    with pytest.raises(ArgumentError):
        hecm.fit(data, HecmConfig(K=3, R=1), init=truth)
    with pytest.raises(ArgumentError):
        hecm.fit(data[:1], HecmConfig(K=2, R=1))
    with pytest.raises(DeadFactorError) as info:
        hecm.fit(data, HecmConfig(K=2, R=1, lambda0=100.0), init=truth)
    assert info.value.iteration == 1 and "cluster" in str(info.value)


def test_initialize_on_separated_clusters():
    rng = np.random.default_rng(9)
    labels = np.repeat([0, 1], 20)
    centers = np.stack([np.full((3, 3, 3), 5.0), np.full((3, 3, 3), -5.0)])
    xs = centers[labels] + rng.standard_normal((40, 3, 3, 3))
    theta, init = hecm.initialize(xs, HecmConfig(K=2, R=1))
    assert clustering_error(init, labels) == 0.0
    np.testing.assert_allclose(theta.pis, [0.5, 0.5])
    assert check_invariants(theta) == []


def test_config_validation():
    with pytest.raises(ArgumentError):
        HecmConfig(K=0, R=1)
    with pytest.raises(ArgumentError):
        HecmConfig(K=1, R=1, lambda0=-1)
    with pytest.raises(ArgumentError):
        HecmConfig(K=1, R=1, tol=0)
