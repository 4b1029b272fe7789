"""Non-robust reference estimators: plain IHT and the Lasso."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from robust_ht.core import Dataset, SolverConfig
from robust_ht.losses import LossSpec
from robust_ht.robust_mean import RobustMeanSpec
from robust_ht.solver import SolveResult, solve


def vanilla_iht(dataset: Dataset, loss: LossSpec, config: SolverConfig, reference=None) -> SolveResult:
    """Iterative hard thresholding with the ordinary gradient mean."""
    return solve(dataset, loss, RobustMeanSpec.plain_mean(), config, reference=reference)


def top_eigenvalue(X, iters: int = 50, seed: int = 0) -> float:
    """Largest eigenvalue of ``X'X / n`` by power iteration."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = X.T @ (X @ v) / n
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return float(v @ (X.T @ (X @ v)) / n)


def suggest_step_size(X, iters: int = 20, seed: int = 0) -> float:
    """Step size ``1 / lambda_max`` of the empirical second-moment matrix."""
    lam = top_eigenvalue(X, iters, seed)
    return 1.0 / lam if lam > 0 else 1.0


KKT_CHECK_EVERY = 10


@dataclass(frozen=True)
class LassoConfig:
    """Penalty and stopping rule for :func:`lasso`.

    ``accelerated`` switches from plain proximal gradient to its monotone
    momentum variant; both use the same fixed step and stopping test.
    """

    lam: float
    max_iters: int = 5000
    tol: float = 1e-6
    seed: int = 0
    accelerated: bool = False

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.tol >= 0:
            raise ValueError("tol must be non-negative")


@dataclass(frozen=True)
class LassoResult:
    beta: np.ndarray
    converged: bool
    iterations: int
    objectives: np.ndarray


def soft_threshold(v, t: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lasso_objective(X, y, beta, lam: float) -> float:
    r = y - X @ beta
    return float(r @ r / (2 * X.shape[0]) + lam * np.abs(beta).sum())


def _violation(grad, beta, lam):
    return np.where(beta != 0, np.abs(grad + lam * np.sign(beta)), np.maximum(np.abs(grad) - lam, 0.0))


def kkt_violation(X, y, beta, lam: float) -> np.ndarray:
    """Per-coordinate distance of ``0`` from the Lasso subdifferential."""
    g = -X.T @ (y - X @ beta) / X.shape[0]
    return _violation(g, beta, lam)


def lasso(dataset: Dataset, config: LassoConfig) -> LassoResult:
    """Proximal gradient for ``(1/2n) ||y - X b||^2 + lam ||b||_1``.

    Uses a fixed step ``1/L`` with ``L`` the top eigenvalue of ``X'X/n``
    (50 power iterations, inflated by 1% to stay on the safe side of the
    estimate). Stops when the KKT violation is at most ``tol`` in every
    coordinate; otherwise returns with ``converged=False``. The recorded
    objective never increases, with or without acceleration.
    """
    X, y = dataset.X, dataset.y
    if y is None:
        raise ValueError("lasso needs a labeled dataset")
    n, d = X.shape
    lam = config.lam
    L = 1.01 * top_eigenvalue(X, 50, config.seed)
    beta = np.zeros(d)
    if L == 0.0:
        return LassoResult(beta, True, 0, np.array([lasso_objective(X, y, beta, lam)]))
    step = 1.0 / L
    r = y.copy()
    obj = float(r @ r / (2 * n))
    objs = [obj]
    grad = -X.T @ r / n
    converged = False
    it = 0
    if not config.accelerated:
        for it in range(1, config.max_iters + 1):
            beta = soft_threshold(beta - step * grad, step * lam)
            r = y - X @ beta
            objs.append(float(r @ r / (2 * n) + lam * np.abs(beta).sum()))
            grad = -X.T @ r / n
            if _violation(grad, beta, lam).max() <= config.tol:
                converged = True
                break
        return LassoResult(beta, converged, it, np.array(objs))

    # monotone momentum variant: keep the better of the prox point and the
    # previous iterate, extrapolate from both; test optimality every few steps
    t = 1.0
    point, point_grad = beta, grad
    for it in range(1, config.max_iters + 1):
        z = soft_threshold(point - step * point_grad, step * lam)
        rz = y - X @ z
        fz = float(rz @ rz / (2 * n) + lam * np.abs(z).sum())
        prev = beta
        if fz <= obj:
            beta, r, obj = z, rz, fz
        objs.append(obj)
        if it % KKT_CHECK_EVERY == 0 or it == config.max_iters:
            if _violation(-X.T @ r / n, beta, lam).max() <= config.tol:
                converged = True
                break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        point = beta + (t / t_next) * (z - beta) + ((t - 1.0) / t_next) * (beta - prev)
        point_grad = -X.T @ (y - X @ point) / n
        t = t_next
    return LassoResult(beta, converged, it, np.array(objs))


def lambda_max(dataset: Dataset) -> float:
    """Smallest ``lam`` for which the Lasso solution is zero."""
    return float(np.max(np.abs(dataset.X.T @ dataset.y)) / dataset.n)


def lasso_grid(dataset: Dataset, num: int = 12, ratio: float = 1e-3) -> np.ndarray:
    top = lambda_max(dataset)
    return np.geomspace(top, top * ratio, num)


def best_lasso_error(
    dataset: Dataset, beta_star, lams=None, max_iters: int = 20000, tol: float = 1e-4, accelerated: bool = True
) -> float:
    """Smallest l2 error to ``beta_star`` over a grid of penalties.

    Picking the penalty with the truth favours the Lasso; it is meant as an
    optimistic baseline. The default tolerance keeps the error within about
    1% of a fully converged fit at a fraction of the cost.
    """
    lams = lasso_grid(dataset) if lams is None else lams
    return min(
        float(np.linalg.norm(lasso(dataset, LassoConfig(lam, max_iters, tol, accelerated=accelerated)).beta - beta_star))
        for lam in lams
    )
