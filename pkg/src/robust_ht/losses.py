"""Per-sample losses and gradients: squared, logistic and Huber."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.special import expit

from robust_ht.core import Dataset, DimensionError


@dataclass(frozen=True)
class LossSpec:
    kind: Literal["squared", "logistic", "huber"] = "squared"
    delta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("squared", "logistic", "huber"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if self.kind == "huber":
            if self.delta is None or not self.delta > 0:
                raise ValueError(f"huber loss needs delta > 0, got {self.delta}")

    @classmethod
    def squared(cls) -> "LossSpec":
        return cls("squared")

    @classmethod
    def logistic(cls) -> "LossSpec":
        return cls("logistic")

    @classmethod
    def huber(cls, delta: float) -> "LossSpec":
        return cls("huber", float(delta))


def _check(x, beta):
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x.shape[-1] != beta.shape[0]:
        raise DimensionError(f"covariate dimension {x.shape[-1]} != parameter dimension {beta.shape[0]}")
    return x, beta


def _check_labels(y):
    if not np.all(np.abs(np.asarray(y, dtype=float)) == 1.0):
        raise ValueError("logistic loss requires labels in {-1, +1}")


def grad_squared(x, y: float, beta) -> np.ndarray:
    x, beta = _check(x, beta)
    return x * (x @ beta - y)


def grad_logistic(x, y: float, beta) -> np.ndarray:
    x, beta = _check(x, beta)
    _check_labels(y)
    # -y x / (1 + exp(y x'b)) with a saturating sigmoid
    return -y * x * expit(-y * (x @ beta))


def grad_huber(x, y: float, beta, delta: float) -> np.ndarray:
    if not delta > 0:
        raise ValueError("delta must be positive")
    x, beta = _check(x, beta)
    r = x @ beta - y
    return x * np.clip(r, -delta, delta)


def per_sample_gradients(X, y, beta, loss: LossSpec) -> np.ndarray:
    """Row ``i`` of the result is the gradient of sample ``i`` at ``beta``."""
    X, beta = _check(X, beta)
    margin = X @ beta
    if loss.kind == "squared":
        w = margin - y
    elif loss.kind == "logistic":
        w = -y * expit(-y * margin)
    else:
        w = np.clip(margin - y, -loss.delta, loss.delta)
    return X * w[:, None]


def per_sample_losses(X, y, beta, loss: LossSpec) -> np.ndarray:
    """Loss of each sample; the squared loss is ``0.5 * r**2`` here."""
    X, beta = _check(X, beta)
    margin = X @ beta
    if loss.kind == "squared":
        return 0.5 * (y - margin) ** 2
    if loss.kind == "logistic":
        return np.logaddexp(0.0, -y * margin)
    a = np.abs(y - margin)
    return np.where(a <= loss.delta, 0.5 * a**2, loss.delta * a - 0.5 * loss.delta**2)


def objective(dataset: Dataset, beta, loss: LossSpec, rows=None) -> float:
    """Empirical objective summed over samples (optionally a subset of rows).

    The squared case reports the residual sum of squares ``sum (y - x'b)^2``
    without the one-half factor; logistic and Huber sum their per-sample
    losses.
    """
    if dataset.y is None:
        raise ValueError("objective needs a labeled dataset")
    if loss.kind == "logistic":
        _check_labels(dataset.y)
    X, y = dataset.X, dataset.y
    if rows is not None:
        X, y = X[rows], y[rows]
    if loss.kind == "squared":
        X, beta = _check(X, beta)
        return float(np.sum((y - X @ beta) ** 2))
    return float(np.sum(per_sample_losses(X, y, beta, loss)))


def default_huber_delta(y) -> float:
    """1.345 times the normalized median absolute deviation of ``y``."""
    y = np.asarray(y, dtype=float)
    scale = 1.4826 * float(np.median(np.abs(y - np.median(y))))
    return 1.345 * scale if scale > 0 else 1.345
