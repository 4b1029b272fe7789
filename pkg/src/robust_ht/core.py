"""Shared data model: datasets, solver configuration, thresholding and projection."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

DatasetKind = Literal["regression", "classification", "unlabeled"]

UNBOUNDED = math.inf

_MASK64 = (1 << 64) - 1


class DimensionError(ValueError):
    """Raised when array shapes or sparsity levels are inconsistent."""


@dataclass(frozen=True)
class Dataset:
    """Covariates ``X`` (n x d) with optional responses ``y``.

    Arrays are copied and marked read-only on construction.
    """

    X: np.ndarray
    y: Optional[np.ndarray] = None
    kind: DatasetKind = "regression"

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise DimensionError(f"X must be 2-d, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite entries")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

        if self.kind not in ("regression", "classification", "unlabeled"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "unlabeled":
            if self.y is not None:
                raise ValueError("unlabeled dataset must not carry y")
            return
        if self.y is None:
            raise ValueError(f"{self.kind} dataset requires y")
        y = np.array(self.y, dtype=float).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise DimensionError(f"X has {X.shape[0]} rows but y has length {y.shape[0]}")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite entries")
        if self.kind == "classification" and not np.all(np.abs(y) == 1.0):
            raise ValueError("classification labels must be exactly -1 or +1")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        y = None if self.y is None else self.y[rows]
        return Dataset(self.X[rows], y, self.kind)


@dataclass(frozen=True)
class SolverConfig:
    k_prime: int
    eta: float = 0.5
    max_iters: int = 300
    projection_radius: float = UNBOUNDED
    sample_split: bool = False
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.k_prime) != self.k_prime or self.k_prime < 1:
            raise ValueError(f"k_prime must be a positive integer, got {self.k_prime}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.projection_radius > 0:
            raise ValueError(f"projection_radius must be positive, got {self.projection_radius}")
        if not self.tol >= 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}")


@dataclass(frozen=True)
class IterateRecord:
    iteration: int
    l2_error: float  # nan when no reference parameter was supplied
    objective: float
    wall_ms: float = field(default=0.0, compare=False)


def hard_threshold(v, k_prime: int) -> np.ndarray:
    """Keep the ``k_prime`` largest-magnitude entries of ``v`` and zero the rest.

    Ties in magnitude go to the lower index.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError("hard_threshold expects a 1-d vector")
    if k_prime < 1 or k_prime > v.shape[0]:
        raise DimensionError(f"k_prime={k_prime} outside [1, {v.shape[0]}]")
    # stable sort on negated magnitude keeps lower indices first among ties
    keep = np.argsort(-np.abs(v), kind="stable")[:k_prime]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def project_ball(v, radius: float = UNBOUNDED) -> np.ndarray:
    """Euclidean projection onto the centred l2 ball of the given radius."""
    v = np.asarray(v, dtype=float)
    if math.isinf(radius):
        return v.copy()
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v.copy()
    return v * (radius / norm)


def support(v) -> np.ndarray:
    return np.flatnonzero(np.asarray(v))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def child_seed(seed: int, index: int) -> int:
    """Derive the seed for replication ``index`` from a parent seed.

    Two rounds of splitmix64 mixing; the result is independent of the
    order in which replications are scheduled.
    """
    return splitmix64(splitmix64(seed & _MASK64) ^ (index & _MASK64))


def _is_header(row: Sequence[str]) -> bool:
    for cell in row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def read_dataset_csv(path, kind: DatasetKind = "regression") -> Dataset:
    """Read a dataset CSV: first column y, remaining columns X.

    A header row is detected (any non-numeric cell) and skipped. For
    ``kind="unlabeled"`` every column is a covariate.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and _is_header(rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    if kind == "unlabeled":
        return Dataset(data, None, "unlabeled")
    if width < 2:
        raise ValueError(f"{path}: need a response column and at least one covariate")
    return Dataset(data[:, 1:], data[:, 0], kind)


def dataset_csv_text(dataset: Dataset, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    labeled = dataset.y is not None
    if header:
        cols = [f"x{j}" for j in range(dataset.d)]
        writer.writerow((["y"] if labeled else []) + cols)
    for i in range(dataset.n):
        row = [repr(float(v)) for v in dataset.X[i]]
        if labeled:
            row.insert(0, repr(float(dataset.y[i])))
        writer.writerow(row)
    return buf.getvalue()


def write_dataset_csv(dataset: Dataset, path, header: bool = True) -> None:
    Path(path).write_text(dataset_csv_text(dataset, header), encoding="utf-8")
