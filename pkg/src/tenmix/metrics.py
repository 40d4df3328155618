"""Evaluation metrics for fitted mixtures and the parameter distance."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ArgumentError

ZERO_TOL = 1e-8


def clustering_error(est, truth):
    """Fraction of sample pairs on which the two labelings disagree about co-membership."""
    est = np.asarray(est).ravel()
    truth = np.asarray(truth).ravel()
    if est.size != truth.size:
        raise ArgumentError(f"label vectors differ in length: {est.size} vs {truth.size}")
    n = est.size
    if n < 2:
        raise ArgumentError("clustering error needs at least two samples")
    # disagreements = pairs same in exactly one labeling, counted from contingency tables
    _, a = np.unique(est, return_inverse=True)
    _, b = np.unique(truth, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1)

    def pairs(c):
        return float(np.sum(c * (c - 1) / 2))

    same_est = pairs(table.sum(axis=1))
    same_truth = pairs(table.sum(axis=0))
    same_both = pairs(table)
    return (same_est + same_truth - 2 * same_both) / (n * (n - 1) / 2)


def _relative_mean_errors(est, truth):
    # cost[i, j]: relative Frobenius error of estimated cluster i against true cluster j
    est_full = [cp.full() for cp in est.means]
    true_full = [cp.full() for cp in truth.means]
    norms = np.array([np.linalg.norm(u) for u in true_full])
    if np.any(norms == 0):
        raise ArgumentError("a true cluster mean has zero norm")
    return np.array([[np.linalg.norm(e - u) / nu for u, nu in zip(true_full, norms)]
                     for e in est_full])


def match_clusters(est, truth):
    """Permutation ``order`` so ``est.permuted(order)`` best aligns with ``truth``.

    Uses the Hungarian assignment on the mean-error cost.
    """
    if est.K != truth.K:
        raise ArgumentError(f"cluster counts differ: {est.K} vs {truth.K}")
    cost = _relative_mean_errors(est, truth)
    rows, cols = linear_sum_assignment(cost)
    order = np.empty(truth.K, dtype=int)
    order[cols] = rows
    return order


def cluster_mean_error(est, truth):
    """Average relative Frobenius error of the cluster means (clusters already matched)."""
    cost = _relative_mean_errors(est, truth)
    return float(np.mean(np.diag(cost)))


def kron_relative_error(a_mats, b_mats):
    """``||⊗A - ⊗B||_F / ||⊗B||_F`` without forming either Kronecker product."""
    aa = np.prod([np.sum(a * a) for a in a_mats])
    bb = np.prod([np.sum(b * b) for b in b_mats])
    ab = np.prod([np.sum(a * b) for a, b in zip(a_mats, b_mats)])
    return float(np.sqrt(max(aa - 2 * ab + bb, 0.0) / bb))


def covariance_error(est, truth):
    """Average relative Frobenius error of the separable covariances (clusters matched)."""
    errs = []
    for pe, pt in zip(est.precisions, truth.precisions):
        try:
            se = [np.linalg.inv(o) for o in pe.omegas]
        except np.linalg.LinAlgError as exc:
            raise ArgumentError("estimated precision is singular") from exc
        st = [np.linalg.inv(o) for o in pt.omegas]
        errs.append(kron_relative_error(se, st))
    return float(np.mean(errs))


class EdgeRates(NamedTuple):
    tpr: float
    fpr: float
    tpr_defined: bool
    fpr_defined: bool


def edge_rates(est, truth, zero_tol=ZERO_TOL):
    """True and false positive rates of off-diagonal precision support.

    Counts upper-triangle entries over all modes per cluster, then averages
    over clusters. A rate with an empty denominator is NaN and flagged.
    """
    tprs, fprs = [], []
    for pe, pt in zip(est.precisions, truth.precisions):
        tp = pos = fp = neg = 0
        for oe, ot in zip(pe.omegas, pt.omegas):
            iu = np.triu_indices(ot.shape[0], 1)
            t = np.abs(ot[iu]) > zero_tol
            e = np.abs(oe[iu]) > zero_tol
            tp += np.sum(t & e)
            pos += np.sum(t)
            fp += np.sum(~t & e)
            neg += np.sum(~t)
        tprs.append(tp / pos if pos else np.nan)
        fprs.append(fp / neg if neg else np.nan)
    tpr = float(np.mean(tprs))
    fpr = float(np.mean(fprs))
    return EdgeRates(tpr, fpr, not np.isnan(tpr), not np.isnan(fpr))


def param_distance(a, b):
    """Largest relative parameter change between ``a`` and reference ``b``.

    Factor vectors are compared up to sign; weights and precisions relative to
    the reference.
    """
    if a.K != b.K or a.R != b.R or a.dims != b.dims:
        raise ArgumentError("parameter sets differ in shape")
    dist = 0.0
    for ca, cb, pa, pb in zip(a.means, b.means, a.precisions, b.precisions):
        if np.any(cb.weights == 0):
            raise ArgumentError("reference weight is zero")
        dist = max(dist, float(np.max(np.abs(ca.weights - cb.weights) / np.abs(cb.weights))))
        for fa, fb in zip(ca.factors, cb.factors):
            plus = np.linalg.norm(fa - fb, axis=0)
            minus = np.linalg.norm(fa + fb, axis=0)
            dist = max(dist, float(np.max(np.minimum(plus, minus))))
        for oa, ob in zip(pa.omegas, pb.omegas):
            nb = np.linalg.norm(ob)
            if nb == 0:
                raise ArgumentError("reference precision is zero")
            dist = max(dist, float(np.linalg.norm(oa - ob) / nb))
    return dist
