"""Seeded replication runners behind the command-line subcommands."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from robust_ht.baselines import best_lasso_error, suggest_step_size
from robust_ht.core import SolverConfig, child_seed
from robust_ht.graphical import GraphEstimate, regression_path, roc_auc, roc_points
from robust_ht.losses import LossSpec, default_huber_delta
from robust_ht.robust_mean import RobustMeanSpec
from robust_ht.solver import SolveResult, solve
from robust_ht.synthgen import GenSpec, GroundTruth, generate

THREADS_ENV = "ROBUST_HT_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def run_replications(fn: Callable[[int], object], reps: int, workers: Optional[int] = None) -> list:
    """Evaluate ``fn(rep)`` for every replication, results in replication order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or reps <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(reps)))


def rep_spec(spec: GenSpec, rep: int) -> GenSpec:
    return replace(spec, seed=child_seed(spec.seed, rep))


@dataclass(frozen=True)
class RegressionRun:
    replication: int
    seed: int
    result: SolveResult
    truth: GroundTruth
    eta: float
    loss: LossSpec

    @property
    def final_error(self) -> float:
        return self.result.trace[-1].l2_error


def regression_replicate(
    spec: GenSpec,
    loss: str,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    rep: int,
    eta_auto: bool = False,
    huber_delta: Optional[float] = None,
    authentic_objective: bool = False,
) -> RegressionRun:
    rs = rep_spec(spec, rep)
    data, truth = generate(rs)
    if loss == "huber":
        loss_spec = LossSpec.huber(huber_delta if huber_delta is not None else default_huber_delta(data.y))
    else:
        loss_spec = LossSpec(loss)
    cfg = replace(config, seed=rs.seed)
    if eta_auto:
        cfg = replace(cfg, eta=suggest_step_size(data.X, 20, rs.seed))
    rows = truth.clean_mask if authentic_objective else None
    result = solve(data, loss_spec, mean_spec, cfg, reference=truth.beta_star, objective_rows=rows)
    return RegressionRun(rep, rs.seed, result, truth, cfg.eta, loss_spec)


def run_regression(
    spec: GenSpec,
    loss: str,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    reps: int,
    workers: Optional[int] = None,
    **kwargs,
) -> List[RegressionRun]:
    return run_replications(
        lambda r: regression_replicate(spec, loss, mean_spec, config, r, **kwargs), reps, workers
    )


def quantiles(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"min": q[0], "q25": q[1], "median": q[2], "q75": q[3], "max": q[4]}


@dataclass(frozen=True)
class GraphRun:
    replication: int
    seed: int
    truth: GroundTruth
    path: List[GraphEstimate]
    points: list
    auc: float


def graphical_replicate(
    spec: GenSpec,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    k_values: Sequence[int],
    rep: int,
    aggregation: str = "union",
) -> GraphRun:
    rs = rep_spec(spec, rep)
    data, truth = generate(rs)
    path = regression_path(data, mean_spec, replace(config, seed=rs.seed), k_values, aggregation)
    pts = roc_points(path, truth)
    return GraphRun(rep, rs.seed, truth, path, pts, roc_auc(pts))


def run_graphical(spec, mean_spec, config, k_values, reps, aggregation="union", workers=None) -> List[GraphRun]:
    return run_replications(
        lambda r: graphical_replicate(spec, mean_spec, config, k_values, r, aggregation), reps, workers
    )


BENCH_METHODS = ("mom", "trimmed", "vanilla", "lasso")


def bench_error(
    method: str,
    spec: GenSpec,
    config: SolverConfig,
    rep: int,
    trim_alpha: float = 0.1,
    eta_auto: bool = False,
    mom_blocks="auto",
) -> float:
    """Final l2 error of one method on one seeded dataset."""
    rs = rep_spec(spec, rep)
    data, truth = generate(rs)
    if method == "lasso":
        return best_lasso_error(data, truth.beta_star)
    if eta_auto:
        config = replace(config, eta=suggest_step_size(data.X, 20, rs.seed))
    mean_spec = {
        "mom": RobustMeanSpec.mom(mom_blocks),
        "trimmed": RobustMeanSpec.trimmed(trim_alpha),
        "vanilla": RobustMeanSpec.plain_mean(),
    }[method]
    res = solve(data, LossSpec.squared(), mean_spec, replace(config, seed=rs.seed), reference=truth.beta_star)
    return res.trace[-1].l2_error


def run_bench(
    spec: GenSpec,
    config: SolverConfig,
    ns: Sequence[int],
    methods: Sequence[str],
    reps: int,
    workers=None,
    **kwargs,
):
    """Median final error for every (method, n) pair; ``kwargs`` go to :func:`bench_error`."""
    rows = []
    for method in methods:
        if method not in BENCH_METHODS:
            raise ValueError(f"unknown method {method!r}")
        for n in ns:
            s = replace(spec, n=int(n))
            errs = run_replications(lambda r: bench_error(method, s, config, r, **kwargs), reps, workers)
            rows.append({"method": method, "n": int(n), "median_error": float(np.median(errs)), "errors": errs})
    return rows
