"""Command-line front end.

    oba solve --loss logistic --data train.svm --mu 0.01 --out runs/
    oba generate --n 500 --seed 7 --out data/
    oba analyze --data data/synthetic_n500_s7.svm --normalize minmax
    oba benchmark --data a.svm --data b.svm --solvers oba,ista --out bench/

Exit codes: 0 success, 1 input or configuration error, 2 iteration cap.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import ista_solve
from .data_io import (LibsvmFormatError, SyntheticSpec, fingerprint, generate_synthetic,
                      normalize_features, read_libsvm, write_libsvm)
from .diagnostics import diagonal_dominance, relative_error, sparsity_percent
from .objective import LeastSquaresLoss, LogisticLoss, Problem, QuadraticLoss
from .solver import ConfigError, SolverConfig, SolverError, solve

logger = logging.getLogger("oba")

EXIT_OK, EXIT_INPUT, EXIT_MAXITER = 0, 1, 2

TRACE_COLUMNS = ("iter", "seconds", "phi", "rel_err", "g_inf", "nnz",
                 "cycle_j", "cg_iters", "alpha", "alpha_bar")


class InputError(Exception):
    pass


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _load_problem(args):
    path = Path(args.data)
    if not path.is_file():
        raise InputError(f"cannot read data file {path}")
    try:
        ds = read_libsvm(path, regression=args.loss != "logistic")
    except (LibsvmFormatError, ValueError, OSError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    ds = normalize_features(ds, args.normalize)
    try:
        if args.loss == "logistic":
            obj = LogisticLoss(ds.A, ds.y, ridge=args.ridge)
        elif args.loss == "lasso":
            obj = LeastSquaresLoss(ds.A, ds.b, ridge=args.ridge)
        else:
            # rows of the file are rows of H; the label column is c
            obj = QuadraticLoss(ds.A, ds.b, ridge=args.ridge)
        if args.L is not None:
            obj.L_override = args.L
        problem = Problem(obj, args.mu)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return problem, ds, path


def _config(args, tol):
    return SolverConfig(mu=args.mu, eta=args.eta, eps=args.eps, cg_rel_tol=args.cg_tol,
                        outer_tol=tol, max_outer_iters=args.max_iters, L_override=args.L,
                        seed=args.seed)


def _run_solver(name, problem, cfg, time_limit=None):
    if name == "oba":
        if time_limit is not None:
            cfg.time_limit = time_limit
        return solve(problem, None, cfg)
    if name == "ista":
        return ista_solve(problem, None, tol=cfg.outer_tol, max_iters=cfg.max_outer_iters,
                          L=cfg.L_override, time_limit=time_limit)
    raise InputError(f"unknown solver {name!r}")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace_csv(report, path, phi_star=None):
    """One row per iterate, starting with ``x^0``."""
    def rel(phi):
        return relative_error(phi, phi_star) if phi_star is not None else math.nan

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerow([_fmt(v) for v in (0, 0.0, report.phi_initial, rel(report.phi_initial),
                                      report.g_inf_initial, "", "", "", "", "")])
        for t in report.traces:
            w.writerow([_fmt(v) for v in (t.k + 1, t.seconds, t.phi, rel(t.phi), t.g_inf,
                                          t.nnz, t.cycle_j, t.cg_iters, t.alpha, t.alpha_bar)])


def _write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _manifest(command, args, started, datasets=(), extra=None):
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    m = {
        "command": command,
        "config": echo,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "datasets": [{"path": str(p), "sha256": fingerprint(p)} for p in datasets],
    }
    if extra:
        m.update(extra)
    return m


def cmd_solve(args):
    started = _now()
    problem, ds, path = _load_problem(args)
    cfg = _config(args, args.tol)
    report = _run_solver(args.solver, problem, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{path.stem}_{args.solver}"
    summary = report.summary()
    summary["sparsity_percent"] = sparsity_percent(report.x)
    summary["manifest"] = f"{stem}_manifest.json"
    summary["x"] = report.x.tolist()
    write_trace_csv(report, out / f"{stem}_trace.csv")
    _write_json(summary, out / f"{stem}_report.json")
    _write_json(_manifest("solve", args, started, [path],
                          {"outputs": [f"{stem}_trace.csv", f"{stem}_report.json"]}),
                out / f"{stem}_manifest.json")
    print(f"{args.solver}: {report.termination} after {report.iterations} iterations, "
          f"phi = {report.phi:.12g}, ||g||_inf = {report.g_inf:.3e}, "
          f"zeros = {summary['sparsity_percent']:.2f}%")
    return EXIT_OK if report.termination == "tolerance" else EXIT_MAXITER


def cmd_generate(args):
    started = _now()
    if args.n < 2:
        raise InputError("--n must be >= 2")
    ds = generate_synthetic(SyntheticSpec(args.n, args.seed), normalize=args.normalize)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"synthetic_n{args.n}_s{args.seed}"
    data_path = out / f"{stem}.svm"
    write_libsvm(ds, data_path)
    manifest = _manifest("generate", args, started, [data_path], {"outputs": [data_path.name]})
    manifest.pop("started")
    manifest.pop("finished")
    _write_json(manifest, out / f"{stem}_manifest.json")
    print(data_path)
    return EXIT_OK


def cmd_analyze(args):
    problem, ds, path = _load_problem(args)
    n_rows, n_cols = ds.shape
    if n_cols > args.cap:
        raise InputError(f"{n_cols} features exceed the Hessian column cap {args.cap}; "
                         f"raise it with --cap")
    value = diagonal_dominance(problem.objective, np.zeros(n_cols), n_cap=args.cap)
    print(f"data: {path}")
    print(f"shape: {n_rows} x {n_cols}, nnz = {ds.A.nnz}")
    print(f"D(hessian at 0) = {value:.6g}")
    return EXIT_OK


def cmd_benchmark(args):
    started = _now()
    if not args.data:
        raise InputError("no datasets given")
    solvers = [s for s in args.solvers.split(",") if s]
    for s in solvers:
        if s not in ("oba", "ista"):
            raise InputError(f"unknown solver {s!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    paths = []
    exit_code = EXIT_OK
    for data in args.data:
        sub = argparse.Namespace(**vars(args))
        sub.data = data
        problem, ds, path = _load_problem(sub)
        paths.append(path)
        ref_cfg = _config(args, args.ref_tol)
        ref_cfg.max_outer_iters = max(args.max_iters, 100000)
        ref = _run_solver("oba", problem, ref_cfg, time_limit=args.time_cap)
        phi_star = ref.phi
        approximate = ref.termination != "tolerance"
        record = {"dataset": path.stem, "phi_star": phi_star, "approximate": approximate,
                  "reference_termination": ref.termination, "traces": {}}
        for name in solvers:
            report = _run_solver(name, problem, _config(args, args.tol))
            phi_star = min(phi_star, report.phi)
            csv_name = f"{path.stem}_{name}.csv"
            record["traces"][name] = {"file": csv_name, "termination": report.termination,
                                      "iterations": report.iterations,
                                      "fallback_count": report.fallback_count}
            record.setdefault("_reports", {})[name] = report
            if report.termination != "tolerance":
                exit_code = EXIT_MAXITER
        if phi_star < record["phi_star"]:
            record["phi_star"] = phi_star
            record["approximate"] = True
        for name, report in record.pop("_reports").items():
            write_trace_csv(report, out / record["traces"][name]["file"], record["phi_star"])
        _write_json(record, out / f"{path.stem}_reference.json")
        records.append(record)
        logger.info("%s: phi* = %.12g", path.stem, record["phi_star"])
    _write_json(_manifest("benchmark", args, started, paths,
                          {"references": [f"{r['dataset']}_reference.json" for r in records]}),
                out / "manifest.json")
    print(f"wrote {len(records)} reference record(s) to {out}")
    return exit_code


def _common(p):
    p.add_argument("--loss", choices=("logistic", "lasso", "quadratic"), default="logistic")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--L", type=float, default=None, help="Lipschitz constant override")
    p.add_argument("--normalize", choices=("none", "maxabs", "minmax"), default="none")
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--cg-tol", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="oba", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--solver", choices=("oba", "ista"), default="oba")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--normalize", choices=("none", "maxabs", "minmax"), default="none")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="diagonal dominance of the Hessian at 0")
    p.add_argument("--data", required=True)
    p.add_argument("--loss", choices=("logistic", "lasso", "quadratic"), default="logistic")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--normalize", choices=("none", "maxabs", "minmax"), default="none")
    p.add_argument("--cap", type=int, default=10000)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("benchmark", help="relative error traces for several solvers")
    _common(p)
    p.add_argument("--data", action="append", default=[])
    p.add_argument("--solvers", default="oba,ista")
    p.add_argument("--ref-tol", type=float, default=1e-10)
    p.add_argument("--time-cap", type=float, default=300.0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("OBA_THREADS")
    try:
        if threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(int(threads)):
                return args.func(args)
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
