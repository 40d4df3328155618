"""Command-line interface: ``tenmix <subcommand> [flags]``.

Exit codes: 0 success, 1 fit stopped at ``--max-iter`` without converging,
2 usage, 3 data or format problem, 4 numerical or degeneracy failure,
5 non-convergence with ``--strict``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io, study
from .errors import (
    ArgumentError,
    ConvergenceError,
    FormatError,
    TenmixError,
)
from .hecm import HecmConfig, fit
from .ingest import WindowSpec, load_cohort, write_cohort
from .model_select import dump_report, select_k, tune
from .params import ModelParams
from .simulation import SimDesign, generate

log = logging.getLogger("tenmix")

EXIT_OK, EXIT_MAXITER, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_STRICT = range(6)


class UsageError(Exception):
    pass


# ------------------------------------------------------------ parsing

def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _add_fit_flags(p):
    p.add_argument("-K", type=int, default=2, help="number of clusters")
    p.add_argument("-R", type=int, default=1, help="CP rank of every cluster mean")
    p.add_argument("--lambda0", type=float, default=0.0, help="l1 penalty on factor vectors")
    p.add_argument("--lambda1", type=float, default=0.0, help="l1 penalty on precision off-diagonals")
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--inner-repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true",
                   help="treat non-convergence as an error (exit 5)")


def _add_design_flags(p, seed_required):
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--dims", type=_ints, default=[10, 10, 10], help="comma list, e.g. 10,10,10")
    p.add_argument("-K", type=int, default=4)
    p.add_argument("-R", type=int, default=4)
    p.add_argument("--mu", type=float, default=0.85)
    p.add_argument("--nu", type=float, default=0.3)
    p.add_argument("--seed", type=int, required=seed_required, default=None)


def build_parser():
    top = argparse.ArgumentParser(prog="tenmix", description=__doc__.splitlines()[0])
    top.add_argument("--config", help="key=value file; flags override it")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw samples from the simulation design")
    _add_design_flags(p, seed_required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("fit", help="run the HECM estimator on a sample directory")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--init", help="starting ModelParams JSON instead of k-means")
    _add_fit_flags(p)

    p = sub.add_parser("select", help="eBIC tuning of R, lambda0, lambda1 (and optionally K)")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_fit_flags(p)
    p.add_argument("--R-grid", type=_ints, dest="R_grid")
    p.add_argument("--lambda0-grid", type=_floats, dest="lambda0_grid")
    p.add_argument("--lambda1-grid", type=_floats, dest="lambda1_grid")
    p.add_argument("--k-values", type=_ints, dest="k_values")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("evaluate", help="compare a fit against simulation truth")
    p.add_argument("--input", required=True, help="fit output directory")
    p.add_argument("--truth", required=True, help="simulate output directory")
    p.add_argument("--output", required=True, help="metrics CSV path")

    p = sub.add_parser("replicate", help="seeded simulation replications")
    _add_design_flags(p, seed_required=True)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--inner-repeats", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", required=True)

    p = sub.add_parser("rate", help="mean CME against n and the log-log slope")
    _add_design_flags(p, seed_required=True)
    p.add_argument("--ns", type=_ints, default=[200, 400, 800, 1600])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", required=True)

    p = sub.add_parser("ingest", help="connectivity tensors from per-subject CSV series")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--windows", type=int, default=1)
    p.add_argument("--window-len", type=int, default=20)

    p = sub.add_parser("report", help="print metric CSVs as a table")
    p.add_argument("--input", required=True, nargs="+")
    return top


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; keys use flag spellings."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value.strip("\"'")
    return out


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            conf = read_config(known.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        choices = parser._subparsers._group_actions[0].choices
        command = next((a for a in argv if a in choices), None)
        if command is None:
            raise UsageError("a subcommand is required")
        sub = choices[command]
        actions = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in conf.items():
            if key not in actions:
                raise UsageError(f"config key {key!r} is not a flag of '{command}'")
            a = actions[key]
            if a.const is True:
                defaults[key] = value.lower() in ("1", "true", "yes")
            else:
                try:
                    defaults[key] = a.type(value) if a.type else value
                except ValueError as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from exc
            a.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# ------------------------------------------------------------- helpers

def _samples_dir(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input path {path} does not exist")
    return path / "samples" if (path / "samples").is_dir() else path


def _hecm_config(args, K=None):
    return HecmConfig(
        K=K or args.K, R=args.R, lambda0=args.lambda0, lambda1=args.lambda1,
        max_iter=args.max_iter, tol=args.tol, inner_repeats=args.inner_repeats, seed=args.seed,
    )


def _design(args):
    return SimDesign(n=args.n, dims=tuple(args.dims), K=args.K, R=args.R,
                     mu=args.mu, nu=args.nu, seed=args.seed)


def _write_fit(out, result):
    out.mkdir(parents=True, exist_ok=True)
    result.theta.save(out / "params.json")
    io.write_labels(out / "labels.csv", result.labels)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "loglik", "penalized_loglik", "distance"])
        for row in result.trace:
            w.writerow([row["iteration"], repr(row["loglik"]), repr(row["penalized_loglik"]),
                        repr(row["distance"])])
    status = {"status": result.status, "n_iter": result.n_iter, "notes": result.notes}
    (out / "fit.json").write_text(json.dumps(status, indent=1))


def _fit_exit(result, strict):
    if result.converged:
        return EXIT_OK
    log.warning("stopped after %d iterations without converging", result.n_iter)
    return EXIT_STRICT if strict else EXIT_MAXITER


# ------------------------------------------------------------ commands

def cmd_simulate(args):
    design = _design(args)
    data, labels, truth = generate(design)
    out = Path(args.output)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    for i, x in enumerate(data):
        io.write_tnsr(out / "samples" / f"sample_{i:05d}.tnsr", x)
    io.write_labels(out / "labels.csv", labels)
    truth.meta = {"design": study.design_dict(design)}
    truth.save(out / "truth.json")
    return EXIT_OK


def cmd_fit(args):
    data = io.read_samples(_samples_dir(args.input))
    init = ModelParams.load(args.init) if args.init else None
    result = fit(data, _hecm_config(args), init=init)
    _write_fit(Path(args.output), result)
    return _fit_exit(result, args.strict)


def cmd_select(args):
    data = io.read_samples(_samples_dir(args.input))
    grid = {"R": args.R_grid or [args.R], "lambda0": args.lambda0_grid or [args.lambda0],
            "lambda1": args.lambda1_grid or [args.lambda1]}
    cfg = _hecm_config(args)
    pool = ProcessPoolExecutor(args.threads) if args.threads > 1 else None
    try:
        if args.k_values:
            cfg, result, report = select_k(data, args.k_values, grid, cfg, pool)
        else:
            cfg, result, report = tune(data, grid, cfg, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    out = Path(args.output)
    _write_fit(out, result)
    dump_report(report, out / "tuning.json")
    return _fit_exit(result, args.strict)


def cmd_evaluate(args):
    fit_dir, truth_dir = Path(args.input), Path(args.truth)
    for p in (fit_dir / "params.json", truth_dir / "truth.json"):
        if not p.exists():
            raise UsageError(f"{p} does not exist")
    theta = ModelParams.load(fit_dir / "params.json")
    truth = ModelParams.load(truth_dir / "truth.json")
    metrics = study.evaluate(theta, io.read_labels(fit_dir / "labels.csv"), truth,
                             io.read_labels(truth_dir / "labels.csv"))
    rows = [{"metric": m, "mean": v, "stderr": 0.0, "n_reps": 1} for m, v in metrics.items()]
    study.write_summary_csv(rows, args.output)
    return EXIT_OK


def cmd_replicate(args):
    design = _design(args)
    l0, l1 = study.default_penalties(args.n)
    cfg = HecmConfig(K=args.K, R=args.R,
                     lambda0=l0 if args.lambda0 is None else args.lambda0,
                     lambda1=l1 if args.lambda1 is None else args.lambda1,
                     max_iter=args.max_iter, tol=args.tol, inner_repeats=args.inner_repeats)
    rows, records = study.replicate(design, cfg, args.reps, seed=args.seed, threads=args.threads)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    study.write_summary_csv(rows, out / "metrics.csv")
    study.write_records_jsonl(records, out / "replications.jsonl")
    return EXIT_OK


def cmd_rate(args):
    rows, slope = study.rate_study(args.ns, _design(args), args.reps, seed=args.seed,
                                   threads=args.threads)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    study.write_rate_csv(rows, out / "rate.csv")
    (out / "rate.json").write_text(json.dumps({"slope": slope}, indent=1))
    print(f"slope of log CME on log n: {slope:.3f}")
    return EXIT_OK


def cmd_ingest(args):
    src = Path(args.input)
    if not src.is_dir():
        raise UsageError(f"input directory {src} does not exist")
    w = WindowSpec(args.windows, args.window_len)
    cohort = load_cohort(src, w)
    first = sorted(src.glob("*.csv"))
    L = io.read_matrix_csv(first[0]).shape[1] if first else None
    write_cohort(cohort, args.output, w, series_len=L)
    return EXIT_OK


def cmd_report(args):
    for path in args.input:
        p = Path(path)
        if not p.exists():
            raise UsageError(f"{p} does not exist")
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        print(p)
        for r in rows:
            print(f"  {r['metric']:<10} {float(r['mean']):.3f} ({float(r['stderr']):.3f})  "
                  f"n={r['n_reps']}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "select": cmd_select,
    "evaluate": cmd_evaluate, "replicate": cmd_replicate, "rate": cmd_rate,
    "ingest": cmd_ingest, "report": cmd_report,
}


def main(argv=None):
    logging.basicConfig(level=os.environ.get("TENMIX_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    strict = False
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        strict = getattr(args, "strict", False)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, ArgumentError) as exc:
        print(f"tenmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"tenmix: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"tenmix: did not converge: {exc}", file=sys.stderr)
        return EXIT_STRICT if strict else EXIT_NUMERIC
    except (TenmixError, np.linalg.LinAlgError) as exc:
        print(f"tenmix: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
