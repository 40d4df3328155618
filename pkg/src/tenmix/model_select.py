"""Extended BIC, sequential tuning of ``(R, λ0, λ1)`` and choice of ``K``."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ArgumentError, SelectionError, TenmixError
from .hecm import HecmConfig, as_data, fit, mixture_loglik

log = logging.getLogger(__name__)

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class EbicReport:
    score: float
    loglik_term: float
    penalty_term: float
    p_theta: int
    s_tot: int


def parameter_count(K, R, dims):
    return (K - 1) + K * R * (sum(dims) + 1) + K * sum(d * d for d in dims)


def nonzero_count(theta, zero_tol=ZERO_TOL):
    """Nonzero factor entries plus nonzero off-diagonal precision entries."""
    s = 0
    for cp, ps in zip(theta.means, theta.precisions):
        s += sum(int(np.sum(np.abs(f) > zero_tol)) for f in cp.factors)
        for o in ps.omegas:
            off = ~np.eye(o.shape[0], dtype=bool)
            s += int(np.sum(np.abs(o[off]) > zero_tol))
    return s


def ebic_from_parts(loglik, n, p_theta, s_tot):
    """Score from the summed mixture log-likelihood and the two counts."""
    loglik_term = -2.0 * loglik
    penalty_term = (np.log(n) + 0.5 * np.log(p_theta)) * s_tot
    return EbicReport(loglik_term + penalty_term, loglik_term, float(penalty_term),
                      int(p_theta), int(s_tot))


def ebic(data, theta):
    xs = as_data(data)
    return ebic_from_parts(
        mixture_loglik(xs, theta),
        xs.shape[0],
        parameter_count(theta.K, theta.R, theta.dims),
        nonzero_count(theta),
    )


def _candidate(xs, cfg):
    row = {"K": cfg.K, "R": cfg.R, "lambda0": cfg.lambda0, "lambda1": cfg.lambda1}
    try:
        result = fit(xs, cfg)
    except TenmixError as exc:
        log.info("candidate %s failed: %s", row, exc)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}", score=None)
        return row, None
    rep = ebic(xs, result.theta)
    row.update(status=result.status, n_iter=result.n_iter, **asdict(rep))
    return row, result


def _best(rows, results, key):
    # ties go to the first candidate in `key` order (the parsimonious end)
    ok = [i for i, r in enumerate(rows) if r["score"] is not None]
    if not ok:
        raise SelectionError("every candidate fit in this pass failed")
    ok.sort(key=key)
    best = min(ok, key=lambda i: rows[i]["score"])
    return best, results[best]


def tune(data, grid, cfg, executor=None):
    """Sequential eBIC tuning over ``grid = {"R": [...], "lambda0": [...], "lambda1": [...]}``.

    Pass 1 picks ``R`` with both penalties at their minima, pass 2 picks
    ``λ0`` given ``R``, pass 3 picks ``λ1``. Returns ``(cfg, fit_result, report)``
    where ``report`` is a JSON-ready dict listing every candidate. The grid
    points already evaluated in an earlier pass are refit, so the number of
    fits is the sum of the grid sizes. ``executor`` (an object with ``map``)
    may run a pass's candidates in parallel.
    """
    xs = as_data(data)
    Rs = sorted(set(int(r) for r in grid.get("R", [cfg.R])))
    l0s = sorted(set(float(v) for v in grid.get("lambda0", [cfg.lambda0])))
    l1s = sorted(set(float(v) for v in grid.get("lambda1", [cfg.lambda1])))
    if not (Rs and l0s and l1s):
        raise ArgumentError("every grid must be nonempty")
    mapper = executor.map if executor is not None else map
    rows = []

    def run_pass(name, cands, order):
        out = list(mapper(_candidate, [xs] * len(cands), cands))
        prow = [dict(r, **{"pass": name}) for r, _ in out]
        rows.extend(prow)
        i, res = _best(prow, [f for _, f in out], order)
        return cands[i], res

    cands = [replace(cfg, R=r, lambda0=l0s[0], lambda1=l1s[0]) for r in Rs]
    best, _ = run_pass("R", cands, lambda i: i)
    cands = [replace(best, lambda0=v) for v in l0s]
    best, _ = run_pass("lambda0", cands, lambda i: -i)
    cands = [replace(best, lambda1=v) for v in l1s]
    best, res = run_pass("lambda1", cands, lambda i: -i)
    report = {
        "candidates": rows,
        "chosen": {"K": best.K, "R": best.R, "lambda0": best.lambda0, "lambda1": best.lambda1},
        "status": res.status,
        "n_fits": len(rows),
    }
    return best, res, report


def select_k(data, k_values, grid, cfg, executor=None):
    """Tune for every ``K`` in ``k_values`` and keep the smallest final eBIC."""
    xs = as_data(data)
    ks = sorted(set(int(k) for k in k_values))
    if not ks or ks[0] < 1 or ks[-1] > xs.shape[0]:
        raise ArgumentError(f"k_values must lie in [1, n], got {k_values}")
    per_k = []
    best = None
    for k in ks:
        try:
            c, res, rep = tune(xs, grid, replace(cfg, K=k), executor)
        except SelectionError as exc:
            per_k.append({"K": k, "status": "failed", "error": str(exc)})
            continue
        score = ebic(xs, res.theta).score
        per_k.append({"K": k, "score": score, "chosen": rep["chosen"], "tuning": rep})
        if best is None or score < best[0]:
            best = (score, c, res)
    if best is None:
        raise SelectionError("tuning failed for every K")
    report = {"per_K": per_k, "chosen_K": best[1].K}
    return best[1], best[2], report


def dump_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, default=float)
