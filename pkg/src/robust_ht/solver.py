"""Robust hard thresholding: IHT driven by a robust gradient estimate."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from robust_ht.core import (
    Dataset,
    DimensionError,
    IterateRecord,
    SolverConfig,
    hard_threshold,
    project_ball,
)
from robust_ht.losses import LossSpec, objective, per_sample_gradients
from robust_ht.robust_mean import RobustMeanSpec, aggregate_gradients

DIVERGENCE_FACTOR = 1e6


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveResult:
    beta_hat: np.ndarray
    trace: List[IterateRecord] = field(default_factory=list)
    iterations_run: int = 0
    stopped_early: bool = False

    def errors(self) -> np.ndarray:
        return np.array([r.l2_error for r in self.trace])

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.trace])

    def same_as(self, other: "SolveResult") -> bool:
        """Bit-level equality, ignoring wall-clock timings."""
        return (
            np.array_equal(self.beta_hat, other.beta_hat)
            and self.iterations_run == other.iterations_run
            and self.stopped_early == other.stopped_early
            and len(self.trace) == len(other.trace)
            and all(
                a.iteration == b.iteration
                and np.array_equal(a.l2_error, b.l2_error, equal_nan=True)
                and a.objective == b.objective
                for a, b in zip(self.trace, other.trace)
            )
        )


def _split_rows(n: int, T: int):
    size = n // T
    return [slice(t * size, (t + 1) * size) for t in range(T)]


def solve(
    dataset: Dataset,
    loss: LossSpec,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    reference=None,
    objective_rows=None,
) -> SolveResult:
    """Run robust hard thresholding from ``beta = 0``.

    Each iteration aggregates the per-sample gradients at the current
    iterate with ``mean_spec``, takes a gradient step of size
    ``config.eta``, keeps the ``config.k_prime`` largest entries and
    projects onto the ball of radius ``config.projection_radius``.

    Parameters
    ----------
    reference : array, optional
        Known parameter; when given, the trace records the l2 distance of
        every iterate to it.
    objective_rows : index or mask, optional
        Rows over which the traced objective is summed (defaults to all).
        Useful for tracking the loss on authentic samples only.

    Raises
    ------
    DimensionError
        If ``k_prime`` exceeds the dimension or ``reference`` has the
        wrong length.
    SolverError
        If the aggregated gradient is non-finite or the iterate norm
        blows past the divergence guard (usually a step size too large).
    """
    if dataset.y is None:
        raise ValueError("solve needs a labeled dataset")
    n, d = dataset.X.shape
    if n == 0:
        raise ValueError("empty dataset")
    if config.k_prime > d:
        raise DimensionError(f"k_prime={config.k_prime} exceeds dimension {d}")
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != (d,):
            raise DimensionError(f"reference has shape {reference.shape}, expected ({d},)")
    T = config.max_iters
    if config.sample_split:
        if n < T:
            raise ValueError(f"sample splitting needs n >= max_iters ({n} < {T})")
        batches = _split_rows(n, T)
    else:
        batches = None

    radius = config.projection_radius
    guard = DIVERGENCE_FACTOR * (1.0 if math.isinf(radius) else max(1.0, radius))
    X, y = dataset.X, dataset.y
    beta = np.zeros(d)
    trace: List[IterateRecord] = []
    stopped_early = False
    t0 = time.perf_counter()

    for t in range(T):
        Xb, yb = (X, y) if batches is None else (X[batches[t]], y[batches[t]])
        G = aggregate_gradients(per_sample_gradients(Xb, yb, beta, loss), mean_spec)
        if not np.all(np.isfinite(G)):
            raise SolverError(f"non-finite gradient estimate at iteration {t}; step size may be too large")
        new = project_ball(hard_threshold(beta - config.eta * G, config.k_prime), radius)
        if float(np.linalg.norm(new)) > guard:
            raise SolverError(f"iterate norm exceeded {guard:g} at iteration {t}; step size may be too large")
        change = float(np.linalg.norm(new - beta))
        beta = new
        err = float(np.linalg.norm(beta - reference)) if reference is not None else math.nan
        trace.append(
            IterateRecord(
                iteration=t + 1,
                l2_error=err,
                objective=objective(dataset, beta, loss, objective_rows),
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
        if change <= config.tol:
            stopped_early = t + 1 < T
            break

    return SolveResult(beta_hat=beta, trace=trace, iterations_run=len(trace), stopped_early=stopped_early)
