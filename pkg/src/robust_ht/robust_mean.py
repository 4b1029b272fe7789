"""Coordinate-wise robust aggregation of per-sample gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from robust_ht.core import DimensionError


@dataclass(frozen=True)
class RobustMeanSpec:
    """Which coordinate-wise mean estimator to use.

    ``trimmed`` removes ``floor(alpha * n)`` values from each tail;
    ``mom`` takes the median of contiguous block means, with
    ``num_blocks="auto"`` resolving to ``min(n, ceil(4.5 * ln d))``.
    """

    kind: Literal["plain_mean", "trimmed", "mom"] = "plain_mean"
    alpha: float = 0.0
    num_blocks: Union[int, Literal["auto"], None] = None

    def __post_init__(self):
        if self.kind == "trimmed":
            if not 0.0 <= self.alpha < 0.5:
                raise ValueError(f"trim fraction must lie in [0, 0.5), got {self.alpha}")
        elif self.kind == "mom":
            nb = self.num_blocks
            if nb != "auto" and (nb is None or int(nb) != nb or nb < 1):
                raise ValueError(f"num_blocks must be a positive integer or 'auto', got {nb}")
        elif self.kind != "plain_mean":
            raise ValueError(f"unknown estimator {self.kind!r}")

    @classmethod
    def plain_mean(cls) -> "RobustMeanSpec":
        return cls("plain_mean")

    @classmethod
    def trimmed(cls, alpha: float) -> "RobustMeanSpec":
        return cls("trimmed", alpha=float(alpha))

    @classmethod
    def mom(cls, num_blocks: Union[int, str] = "auto") -> "RobustMeanSpec":
        return cls("mom", num_blocks=num_blocks)

    def blocks_for(self, n: int, d: int) -> int:
        if self.num_blocks == "auto":
            return auto_blocks(n, d)
        return int(self.num_blocks)

    def describe(self) -> dict:
        if self.kind == "trimmed":
            return {"kind": "trimmed", "alpha": self.alpha}
        if self.kind == "mom":
            return {"kind": "mom", "num_blocks": self.num_blocks}
        return {"kind": "plain_mean"}


def auto_blocks(n: int, d: int) -> int:
    return max(1, min(n, math.ceil(4.5 * math.log(max(d, 1)))))


def trim_count(n: int, alpha: float) -> int:
    # guard against alpha*n landing a hair below an integer
    return int(math.floor(alpha * n + 1e-9))


def _trimmed_columns(G: np.ndarray, alpha: float) -> np.ndarray:
    n = G.shape[0]
    m = trim_count(n, alpha)
    if 2 * m >= n:
        raise ValueError(f"trimming {m} per side leaves nothing of {n} samples")
    if m == 0:
        return G.mean(axis=0)
    S = np.sort(G, axis=0)
    return S[m : n - m].mean(axis=0)


def _mom_columns(G: np.ndarray, num_blocks: int) -> np.ndarray:
    n = G.shape[0]
    if num_blocks < 1 or num_blocks > n:
        raise ValueError(f"num_blocks={num_blocks} must lie in [1, {n}]")
    base, extra = divmod(n, num_blocks)
    sizes = np.full(num_blocks, base)
    sizes[:extra] += 1
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    means = np.add.reduceat(G, starts, axis=0) / sizes[:, None]
    return np.median(means, axis=0)


def _as_samples(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise DimensionError("expected a 1-d sample vector")
    if xs.shape[0] == 0:
        raise ValueError("empty sample")
    return xs


def trimmed_mean_1d(xs, alpha: float) -> float:
    xs = _as_samples(xs)
    return float(_trimmed_columns(xs[:, None], alpha)[0])


def mom_1d(xs, num_blocks: int) -> float:
    xs = _as_samples(xs)
    return float(_mom_columns(xs[:, None], int(num_blocks))[0])


def aggregate_gradients(grads, spec: RobustMeanSpec, d: Optional[int] = None) -> np.ndarray:
    """Apply the chosen 1-d estimator to each column of an ``(n, d)`` array.

    ``d`` overrides the dimension used to size automatic MOM blocks; by
    default it is the number of columns.
    """
    G = np.asarray(grads, dtype=float)
    if G.ndim != 2:
        raise DimensionError(f"gradients must form an (n, d) array, got shape {G.shape}")
    if G.shape[0] == 0:
        raise ValueError("no gradients to aggregate")
    if spec.kind == "plain_mean":
        return G.mean(axis=0)
    if spec.kind == "trimmed":
        return _trimmed_columns(G, spec.alpha)
    return _mom_columns(G, spec.blocks_for(G.shape[0], G.shape[1] if d is None else d))
