"""Seeded simulation replications, metric summaries and the rate study."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np

from .errors import ArgumentError, TenmixError
from .hecm import HecmConfig, fit
from .metrics import (
    cluster_mean_error,
    clustering_error,
    covariance_error,
    edge_rates,
    match_clusters,
)
from .params import check_invariants
from .simulation import SimDesign, generate

log = logging.getLogger(__name__)

METRICS = ("CE", "CME", "COVME", "TPR", "FPR", "CE_KMEANS")
MAX_FAILURE_RATE = 0.2


def default_penalties(n):
    """Penalties used for the simulation studies: ``0.1`` and ``5e-4`` at ``n = 800``,
    scaled by ``sqrt(800 / n)``."""
    s = np.sqrt(800.0 / n)
    return 0.1 * s, 5e-4 * s


def replication_seeds(seed, n_reps):
    """Independent ``(data_seed, fit_seed)`` pairs, one per replication."""
    children = np.random.SeedSequence(seed).spawn(n_reps)
    return [tuple(int(v) for v in c.generate_state(2)) for c in children]


def evaluate(theta, labels, truth, true_labels):
    """All metrics after matching estimated clusters to the true ones."""
    est = theta.permuted(match_clusters(theta, truth))
    rates = edge_rates(est, truth)
    return {
        "CE": clustering_error(labels, true_labels),
        "CME": cluster_mean_error(est, truth),
        "COVME": covariance_error(est, truth),
        "TPR": rates.tpr,
        "FPR": rates.fpr,
    }


def run_replication(design, cfg, index, data_seed, fit_seed, check=True):
    """One generate → fit → evaluate cycle; failures are returned, not raised."""
    design = replace(design, seed=data_seed)
    cfg = replace(cfg, seed=fit_seed % (2**32))
    record = {"rep": index, "data_seed": data_seed, "fit_seed": cfg.seed}
    violations = []

    def callback(t, theta, tau):
        violations.extend(f"iteration {t}: {v}" for v in check_invariants(theta, tau))

    try:
        data, labels, truth = generate(design)
        result = fit(data, cfg, callback=callback if check else None)
        record.update(evaluate(result.theta, result.labels, truth, labels))
        record["CE_KMEANS"] = clustering_error(result.init_labels, labels)
        record.update(status=result.status, n_iter=result.n_iter, invariant_violations=violations)
    except TenmixError as exc:
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}",
                      invariant_violations=violations)
    return record


def _run_star(args):
    return run_replication(*args)


def summarize(records, metrics=METRICS):
    """Mean and standard error of each metric over the successful replications."""
    ok = [r for r in records if r["status"] != "failed"]
    rows = []
    for m in metrics:
        vals = np.array([r[m] for r in ok if r.get(m) is not None and np.isfinite(r[m])])
        if vals.size == 0:
            rows.append({"metric": m, "mean": float("nan"), "stderr": float("nan"), "n_reps": 0})
            continue
        se = vals.std(ddof=1) / np.sqrt(vals.size) if vals.size > 1 else 0.0
        rows.append({"metric": m, "mean": float(vals.mean()), "stderr": float(se),
                     "n_reps": int(vals.size)})
    return rows


def replicate(design, cfg, n_reps, seed=0, threads=1, check=True,
              max_failure_rate=MAX_FAILURE_RATE):
    """Run ``n_reps`` seeded replications; returns ``(summary_rows, records)``.

    Results do not depend on ``threads``: every replication draws its own
    seeds up front and records are ordered by replication index. Raises
    :class:`TenmixError` when the fraction of failed replications reaches
    ``max_failure_rate``.
    """
    if n_reps < 1:
        raise ArgumentError(f"n_reps must be positive, got {n_reps}")
    seeds = replication_seeds(seed, n_reps)
    jobs = [(design, cfg, i, ds, fs, check) for i, (ds, fs) in enumerate(seeds)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_star, jobs))
    else:
        records = [_run_star(j) for j in jobs]
    records.sort(key=lambda r: r["rep"])
    failed = sum(r["status"] == "failed" for r in records)
    for r in records:
        if r["status"] == "failed":
            log.warning("replication %d failed: %s", r["rep"], r["error"])
    if failed >= max_failure_rate * n_reps:
        raise TenmixError(f"{failed} of {n_reps} replications failed")
    return summarize(records), records


def _fmt(v):
    return "nan" if not np.isfinite(v) else f"{v:.10g}"


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "mean", "stderr", "n_reps"])
        for r in rows:
            w.writerow([r["metric"], _fmt(r["mean"]), _fmt(r["stderr"]), r["n_reps"]])


def write_records_jsonl(records, path):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True, default=float) + "\n")


def rate_study(ns, base, n_reps, seed=0, threads=1, penalties=default_penalties,
               cfg_fields=None):
    """Mean CME at each sample size and the least-squares slope of log CME on log n.

    ``penalties(n)`` gives ``(lambda0, lambda1)``. Returns ``(rows, slope)``
    with one row per sample size. Failed replications are logged and left out
    of the mean. A sample size where every replication fails gets a NaN mean,
    and the slope is then NaN too.
    """
    rows = []
    for n in ns:
        l0, l1 = penalties(n)
        cfg = HecmConfig(K=base.K, R=base.R, lambda0=l0, lambda1=l1, **(cfg_fields or {}))
        _, records = replicate(replace(base, n=n), cfg, n_reps, seed=seed + n,
                               threads=threads, max_failure_rate=np.inf)
        ok = [r for r in records if r["status"] != "failed"]
        cme = float(np.mean([r["CME"] for r in ok])) if ok else float("nan")
        rows.append({"n": n, "log_n": float(np.log(n)), "cme": cme, "log_cme": float(np.log(cme)),
                     "n_reps": len(ok), "n_failed": len(records) - len(ok),
                     "invariant_violations": sum(len(r["invariant_violations"]) for r in records)})
    logs = [r["log_cme"] for r in rows]
    if not np.all(np.isfinite(logs)):
        return rows, float("nan")
    slope = float(np.polyfit([r["log_n"] for r in rows], logs, 1)[0])
    return rows, slope


def write_rate_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "log_n", "cme", "log_cme", "n_reps", "n_failed"])
        for r in rows:
            w.writerow([r["n"], _fmt(r["log_n"]), _fmt(r["cme"]), _fmt(r["log_cme"]), r["n_reps"],
                        r["n_failed"]])


def design_dict(design):
    d = asdict(design)
    d["dims"] = list(d["dims"])
    return d
