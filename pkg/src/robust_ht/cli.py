"""Command-line experiment harness.

Every subcommand writes CSV/JSON into ``--out`` and is deterministic for a
given set of flags; wall-clock columns stay zero unless ``--timing`` is set.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from robust_ht.baselines import suggest_step_size
from robust_ht.core import UNBOUNDED, SolverConfig, read_dataset_csv, write_dataset_csv
from robust_ht.experiments import (
    BENCH_METHODS,
    quantiles,
    run_bench,
    run_graphical,
    run_regression,
)
from robust_ht.graphical import roc_points
from robust_ht.losses import LossSpec, default_huber_delta
from robust_ht.robust_mean import RobustMeanSpec
from robust_ht.solver import SolverError, solve
from robust_ht.synthgen import GenSpec, generate, write_ground_truth

log = logging.getLogger("robust_ht")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_float(s: str) -> float:
    v = float(s)
    if not v >= 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"expected a finite non-negative number, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _eta(s: str):
    return "auto" if s == "auto" else _positive_float(s)


def _radius(s: str) -> float:
    return UNBOUNDED if s in ("unbounded", "inf") else _positive_float(s)


def _blocks(s: str):
    return "auto" if s == "auto" else _positive_int(s)


def _int_list(s: str):
    if ":" in s:
        lo, hi = s.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in s.split(",") if x]


def _add_common(p: argparse.ArgumentParser, n=300, d=1000, k=5, eps=0.0, sigma=0.0, estimator="trimmed", iters=300, eta=0.5):
    g = p.add_argument_group("data")
    g.add_argument("--n", type=_positive_int, default=n)
    g.add_argument("--d", type=_positive_int, default=d)
    g.add_argument("--k", type=_positive_int, default=k)
    g.add_argument("--eps", type=float, default=eps, help="corruption fraction")
    g.add_argument("--sigma", type=_nonneg_float, default=sigma, help="noise scale")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--reps", type=_positive_int, default=1)
    s = p.add_argument_group("solver")
    s.add_argument("--estimator", choices=("mean", "trimmed", "mom"), default=estimator)
    s.add_argument("--trim-alpha", type=float, default=None, help="trim fraction (default: eps)")
    s.add_argument("--mom-blocks", type=_blocks, default="auto")
    s.add_argument("--k-prime", type=_positive_int, default=None, help="sparsity level (default: k)")
    s.add_argument("--eta", type=_eta, default=eta, help="step size or 'auto'")
    s.add_argument("--iters", type=_positive_int, default=iters)
    s.add_argument("--tol", type=_nonneg_float, default=0.0)
    s.add_argument("--radius", type=_radius, default=UNBOUNDED)
    s.add_argument("--sample-split", action="store_true")
    o = p.add_argument_group("output")
    o.add_argument("--out", type=Path, default=Path("."))
    o.add_argument("--timing", action="store_true", help="record wall-clock milliseconds")


def _mean_spec(args) -> RobustMeanSpec:
    if args.estimator == "mean":
        return RobustMeanSpec.plain_mean()
    if args.estimator == "mom":
        return RobustMeanSpec.mom(args.mom_blocks)
    alpha = args.trim_alpha if args.trim_alpha is not None else args.eps
    return RobustMeanSpec.trimmed(alpha)


def _solver_config(args, k_prime=None) -> SolverConfig:
    return SolverConfig(
        k_prime=k_prime or args.k_prime or args.k,
        eta=0.5 if args.eta == "auto" else args.eta,
        max_iters=args.iters,
        projection_radius=args.radius,
        sample_split=args.sample_split,
        tol=args.tol,
        seed=args.seed,
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x))


def _write_trace(path: Path, runs, timing: bool) -> None:
    rows = []
    for run in runs:
        for rec in run.result.trace:
            rows.append(
                [run.replication, rec.iteration, _fmt(rec.l2_error), _fmt(rec.objective),
                 _fmt(rec.wall_ms if timing else 0.0)]
            )
    _write_csv(path, ["replication", "iter", "l2_error", "objective", "wall_ms"], rows)


def _regression_summary(args, runs, spec, mean_spec, config) -> dict:
    finals = [r.final_error for r in runs]
    return {
        "command": args.command,
        "config": {
            "flags": _echo(args),
            "gen_spec": dataclasses.asdict(spec),
            "solver": dataclasses.asdict(config),
            "estimator": mean_spec.describe(),
            "loss": dataclasses.asdict(runs[0].loss),
            "eta_used": [r.eta for r in runs],
        },
        "replication_seeds": [r.seed for r in runs],
        "final_errors": finals,
        "final_error_quantiles": quantiles(finals),
        "final_error_median": float(np.median(finals)),
        "iterations_run": [r.result.iterations_run for r in runs],
        "supports": [np.flatnonzero(r.result.beta_hat).tolist() for r in runs],
    }


def _run_synthetic_regression(args, spec: GenSpec, loss: str, huber_delta=None, authentic_objective=False) -> int:
    mean_spec = _mean_spec(args)
    config = _solver_config(args)
    runs = run_regression(
        spec, loss, mean_spec, config, args.reps,
        eta_auto=args.eta == "auto", huber_delta=huber_delta, authentic_objective=authentic_objective,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    _write_trace(args.out / "trace.csv", runs, args.timing)
    summary = _regression_summary(args, runs, spec, mean_spec, config)
    _write_json(args.out / "summary.json", summary)
    log.info("final error median %.3e", summary["final_error_median"])
    return 0


def _regress_on_file(args) -> int:
    data = read_dataset_csv(args.data)
    if args.loss == "huber":
        loss = LossSpec.huber(args.huber_delta or default_huber_delta(data.y))
    else:
        loss = LossSpec.squared()
    config = _solver_config(args)
    if args.eta == "auto":
        config = dataclasses.replace(config, eta=suggest_step_size(data.X, 20, args.seed))
    mean_spec = _mean_spec(args)
    res = solve(data, loss, mean_spec, config)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        args.out / "trace.csv",
        ["replication", "iter", "l2_error", "objective", "wall_ms"],
        [[0, r.iteration, _fmt(r.l2_error), _fmt(r.objective), _fmt(r.wall_ms if args.timing else 0.0)]
         for r in res.trace],
    )
    support = np.flatnonzero(res.beta_hat)
    _write_json(
        args.out / "summary.json",
        {
            "command": "regress",
            "config": {"flags": _echo(args), "solver": dataclasses.asdict(config), "estimator": mean_spec.describe(),
                       "loss": dataclasses.asdict(loss)},
            "iterations_run": res.iterations_run,
            "beta_hat": {str(int(i)): float(res.beta_hat[i]) for i in support},
        },
    )
    return 0


def cmd_regress(args) -> int:
    if args.data is not None:
        return _regress_on_file(args)
    scheme = "cubic_misspecified" if args.scheme == "cubic" else "linear"
    tail = "cauchy_noise" if args.noise == "cauchy" else "gaussian"
    spec = GenSpec(n=args.n, d=args.d, k=args.k, sigma=args.sigma, epsilon=args.eps,
                   covariance=args.covariance, tail=tail, scheme=scheme, seed=args.seed)
    return _run_synthetic_regression(args, spec, args.loss, args.huber_delta, authentic_objective=scheme != "linear")


def cmd_logistic(args) -> int:
    spec = GenSpec(n=args.n, d=args.d, k=args.k, epsilon=args.eps, covariance="identity",
                   scheme="lda_logistic", seed=args.seed)
    return _run_synthetic_regression(args, spec, "logistic")


def cmd_heavy(args) -> int:
    spec = GenSpec(n=args.n, d=args.d, k=args.k, sigma=args.sigma, epsilon=0.0,
                   covariance="toeplitz_exp", tail="lognormal", scheme="linear", seed=args.seed)
    return _run_synthetic_regression(args, spec, "squared")


def cmd_graphical(args) -> int:
    spec = GenSpec(n=args.n, d=args.d, k=1, epsilon=args.eps, scheme="ggm_cluster", v=args.v, seed=args.seed)
    if args.eta == "auto":
        raise _BadFlag("graphical uses one fixed step size for every node; pass a number to --eta")
    k_values = args.k_values
    config = _solver_config(args, k_prime=k_values[0])
    methods = [("robust", _mean_spec(args))]
    if args.compare_vanilla:
        methods.append(("vanilla", RobustMeanSpec.plain_mean()))
    args.out.mkdir(parents=True, exist_ok=True)
    roc_rows, summary_methods, edge_rows = [], {}, []
    for name, ms in methods:
        runs = run_graphical(spec, ms, config, k_values, args.reps, args.aggregation)
        for run in runs:
            for est in run.path:
                fpr, tpr = roc_points([est], run.truth)[0]
                roc_rows.append([name, run.replication, est.k_prime, _fmt(fpr), _fmt(tpr)])
        if name == "robust":
            last = runs[0].path[-1]
            scores = last.edge_scores()
            edge_rows = [[i, j, _fmt(scores[(i, j)])] for i, j in sorted(last.edges)]
        aucs = [r.auc for r in runs]
        summary_methods[name] = {
            "estimator": ms.describe(),
            "auc": aucs,
            "auc_median": float(np.median(aucs)),
            "true_edges": [len(r.truth.edges) for r in runs],
        }
    _write_csv(args.out / "edges.csv", ["node_i", "node_j", "score"], edge_rows)
    _write_csv(args.out / "roc.csv", ["method", "replication", "k_prime", "fpr", "tpr"], roc_rows)
    _write_json(
        args.out / "summary.json",
        {
            "command": "graphical",
            "config": {"flags": _echo(args), "gen_spec": dataclasses.asdict(spec),
                       "solver": dataclasses.asdict(config)},
            "methods": summary_methods,
        },
    )
    return 0


def cmd_bench(args) -> int:
    tail = "lognormal" if args.tail == "lognormal" else "gaussian"
    spec = GenSpec(n=args.ns[0], d=args.d, k=args.k, sigma=args.sigma, epsilon=args.eps if tail == "gaussian" else 0.0,
                   tail=tail, seed=args.seed)
    config = _solver_config(args)
    methods = [m for m in args.methods.split(",") if m]
    for m in methods:
        if m not in BENCH_METHODS:
            raise _BadFlag(f"unknown method {m!r}; choose from {', '.join(BENCH_METHODS)}")
    alpha = args.trim_alpha if args.trim_alpha is not None else (args.eps or 0.1)
    rows = run_bench(spec, config, args.ns, methods, args.reps, trim_alpha=alpha,
                     eta_auto=args.eta == "auto", mom_blocks=args.mom_blocks)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_csv(args.out / "bench.csv", ["method", "n", "median_error"],
               [[r["method"], r["n"], _fmt(r["median_error"])] for r in rows])
    _write_json(args.out / "summary.json",
                {"command": "bench", "config": {"flags": _echo(args), "gen_spec": dataclasses.asdict(spec),
                                                 "solver": dataclasses.asdict(config)},
                 "rows": rows})
    return 0


def cmd_gen(args) -> int:
    scheme = {"linear": "linear", "cubic": "cubic_misspecified", "lda": "lda_logistic", "ggm": "ggm_cluster"}[args.scheme]
    tail = {"gaussian": "gaussian", "lognormal": "lognormal", "cauchy": "cauchy_noise"}[args.tail]
    spec = GenSpec(n=args.n, d=args.d, k=args.k, sigma=args.sigma, epsilon=args.eps, covariance=args.covariance,
                   tail=tail, scheme=scheme, v=args.v, seed=args.seed)
    data, truth = generate(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(data, args.out / "data.csv")
    write_ground_truth(spec, truth, args.out / "truth.json")
    return 0


class _BadFlag(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-ht", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regress", help="sparse linear regression under corruption")
    _add_common(p, eps=0.1)
    p.add_argument("--scheme", choices=("linear", "cubic"), default="linear")
    p.add_argument("--covariance", choices=("toeplitz_exp", "identity"), default="toeplitz_exp")
    p.add_argument("--noise", choices=("gaussian", "cauchy"), default="gaussian")
    p.add_argument("--loss", choices=("squared", "huber"), default="squared")
    p.add_argument("--huber-delta", type=_positive_float, default=None)
    p.add_argument("--data", type=Path, default=None, help="fit a CSV dataset (y first) instead of synthetic data")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("logistic", help="sparse LDA classification with flipped-label outliers")
    _add_common(p, eps=0.1)
    p.set_defaults(func=cmd_logistic)

    p = sub.add_parser("heavy", help="log-normal heavy-tailed sparse regression")
    _add_common(p, sigma=0.5, estimator="mom")
    p.set_defaults(func=cmd_heavy)

    p = sub.add_parser("graphical", help="robust neighborhood selection on cluster graphs")
    _add_common(p, n=100, d=100, eps=0.1, iters=100, eta=0.1)
    p.add_argument("--v", type=float, default=0.3, help="off-diagonal precision value")
    p.add_argument("--k-values", type=_int_list, default=list(range(1, 11)), help="e.g. 1:10 or 1,2,5")
    p.add_argument("--aggregation", choices=("union", "intersection"), default="union")
    p.add_argument("--compare-vanilla", action="store_true")
    p.set_defaults(func=cmd_graphical)

    p = sub.add_parser("bench", help="median error per (method, n)")
    _add_common(p, sigma=0.5, estimator="mom")
    p.add_argument("--ns", type=_int_list, default=[300, 1200])
    p.add_argument("--methods", default="mom,lasso")
    p.add_argument("--tail", choices=("lognormal", "gaussian"), default="lognormal")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write a synthetic dataset and its ground truth")
    p.add_argument("--scheme", choices=("linear", "cubic", "lda", "ggm"), default="linear")
    p.add_argument("--n", type=_positive_int, default=300)
    p.add_argument("--d", type=_positive_int, default=1000)
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--sigma", type=_nonneg_float, default=0.0)
    p.add_argument("--covariance", choices=("toeplitz_exp", "identity"), default="toeplitz_exp")
    p.add_argument("--tail", choices=("gaussian", "lognormal", "cauchy"), default="gaussian")
    p.add_argument("--v", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_gen)
    return parser


def _validate(parser, args) -> None:
    if not 0.0 <= args.eps < 0.5:
        parser.error(f"--eps must lie in [0, 0.5), got {args.eps}")
    if getattr(args, "trim_alpha", None) is not None and not 0.0 <= args.trim_alpha < 0.5:
        parser.error(f"--trim-alpha must lie in [0, 0.5), got {args.trim_alpha}")
    if getattr(args, "k_prime", None) is not None and args.k_prime > args.d:
        parser.error(f"--k-prime {args.k_prime} exceeds --d {args.d}")
    if args.k > args.d:
        parser.error(f"--k {args.k} exceeds --d {args.d}")
    if args.command == "graphical":
        ks = args.k_values
        if not ks or any(k < 1 for k in ks) or ks != sorted(ks) or ks[-1] > args.d - 1:
            parser.error("--k-values must be ascending integers in [1, d-1]")
    if getattr(args, "sample_split", False) and args.n < args.iters:
        parser.error("--sample-split needs n >= iters")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _validate(parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _BadFlag as exc:
        print(f"robust-ht: error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ValueError, FloatingPointError) as exc:
        print(f"robust-ht: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
