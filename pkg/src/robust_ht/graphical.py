"""Graph structure recovery by robust neighborhood selection."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Literal, Sequence, Tuple

import numpy as np

from robust_ht.core import Dataset, DimensionError, SolverConfig
from robust_ht.losses import LossSpec
from robust_ht.robust_mean import RobustMeanSpec
from robust_ht.solver import SolverError, solve

Aggregation = Literal["union", "intersection"]
Edge = Tuple[int, int]


class NodeSolveError(SolverError):
    def __init__(self, node: int, cause: Exception):
        super().__init__(f"node {node}: {cause}")
        self.node = node


@dataclass(frozen=True)
class GraphEstimate:
    """Per-node neighborhoods plus the aggregated undirected edge set.

    ``coefficients[j, i]`` is the weight of node ``i`` in the regression of
    node ``j`` on the others (zero on the diagonal).
    """

    neighborhoods: Tuple[FrozenSet[int], ...]
    edges: FrozenSet[Edge]
    coefficients: np.ndarray
    aggregation: Aggregation = "union"
    k_prime: int = 0

    @property
    def d(self) -> int:
        return len(self.neighborhoods)

    def edge_scores(self) -> Dict[Edge, float]:
        """Score of every candidate pair: the larger endpoint coefficient magnitude."""
        A = np.abs(self.coefficients)
        S = np.maximum(A, A.T)
        iu = np.triu_indices(self.d, 1)
        return {(int(i), int(j)): float(S[i, j]) for i, j in zip(*iu)}

    def with_aggregation(self, aggregation: Aggregation) -> "GraphEstimate":
        return dataclasses.replace(
            self, aggregation=aggregation, edges=aggregate_edges(self.neighborhoods, aggregation)
        )


def aggregate_edges(neighborhoods: Sequence[Iterable[int]], aggregation: Aggregation = "union") -> FrozenSet[Edge]:
    if aggregation not in ("union", "intersection"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    nbrs = [set(n) for n in neighborhoods]
    edges = set()
    for j, nb in enumerate(nbrs):
        for i in nb:
            if i == j:
                continue
            if aggregation == "union" or j in nbrs[i]:
                edges.add((min(i, j), max(i, j)))
    return frozenset(edges)


def robust_ns(
    dataset: Dataset,
    k_prime: int,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    aggregation: Aggregation = "union",
) -> GraphEstimate:
    """Regress each column on the remaining ones with robust hard thresholding.

    ``k_prime`` overrides ``config.k_prime``. Solver failures are re-raised
    as :class:`NodeSolveError` naming the node.
    """
    X = dataset.X
    n, d = X.shape
    if d < 2:
        raise DimensionError("neighborhood selection needs at least two variables")
    if k_prime < 1 or k_prime > d - 1:
        raise DimensionError(f"k_prime={k_prime} outside [1, {d - 1}]")
    cfg = dataclasses.replace(config, k_prime=k_prime)
    loss = LossSpec.squared()
    coef = np.zeros((d, d))
    neighborhoods = []
    for j in range(d):
        others = np.r_[0:j, j + 1 : d]
        node_data = Dataset(X[:, others], X[:, j], "regression")
        try:
            res = solve(node_data, loss, mean_spec, cfg)
        except (SolverError, FloatingPointError) as exc:
            raise NodeSolveError(j, exc) from exc
        coef[j, others] = res.beta_hat
        neighborhoods.append(frozenset(int(others[i]) for i in np.flatnonzero(res.beta_hat)))
    neighborhoods = tuple(neighborhoods)
    return GraphEstimate(neighborhoods, aggregate_edges(neighborhoods, aggregation), coef, aggregation, k_prime)


def regression_path(
    dataset: Dataset,
    mean_spec: RobustMeanSpec,
    config: SolverConfig,
    k_values: Sequence[int],
    aggregation: Aggregation = "union",
) -> List[GraphEstimate]:
    """One independent :func:`robust_ns` fit per sparsity level.

    Paths are not nested: an edge found at one ``k'`` may vanish at a
    larger one.
    """
    k_values = list(k_values)
    if not k_values:
        raise ValueError("k_values is empty")
    if any(int(k) != k or k < 1 for k in k_values):
        raise ValueError(f"every k' must be a positive integer, got {k_values}")
    if k_values != sorted(k_values):
        raise ValueError("k_values must be sorted ascending")
    return [robust_ns(dataset, int(k), mean_spec, config, aggregation) for k in k_values]


def _true_edges(truth) -> FrozenSet[Edge]:
    edges = truth.edges if hasattr(truth, "edges") else truth
    return frozenset((min(i, j), max(i, j)) for i, j in edges)


def _rates(est: FrozenSet[Edge], true: FrozenSet[Edge], d: int) -> Tuple[float, float]:
    total = d * (d - 1) // 2
    negatives = total - len(true)
    tpr = len(est & true) / len(true)
    fpr = len(est - true) / negatives if negatives else 0.0
    return fpr, tpr


def roc_points(estimates: Sequence[GraphEstimate], truth) -> List[Tuple[float, float]]:
    """(FPR, TPR) for each estimate, sorted by FPR.

    ``truth`` is a :class:`~robust_ht.synthgen.GroundTruth` or an iterable
    of true edges.
    """
    true = _true_edges(truth)
    if not true:
        raise ValueError("true edge set is empty; TPR is undefined")
    if not estimates:
        return []
    return sorted(_rates(e.edges, true, e.d) for e in estimates)


def score_roc_points(estimate: GraphEstimate, truth) -> List[Tuple[float, float]]:
    """ROC points from sweeping a threshold over the edge scores of one fit."""
    true = _true_edges(truth)
    if not true:
        raise ValueError("true edge set is empty; TPR is undefined")
    scores = estimate.edge_scores()
    thresholds = sorted({s for s in scores.values() if s > 0}, reverse=True)
    pts = []
    for t in thresholds:
        est = frozenset(e for e, s in scores.items() if s >= t)
        pts.append(_rates(est, true, estimate.d))
    return sorted(pts)


def roc_auc(points: Iterable[Tuple[float, float]]) -> float:
    """Trapezoid area under the points with (0, 0) and (1, 1) added."""
    pts = sorted(set(points) | {(0.0, 0.0), (1.0, 1.0)})
    fpr = np.array([p[0] for p in pts])
    tpr = np.array([p[1] for p in pts])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def neighborhood_coefficients(sigma) -> np.ndarray:
    """Population regression weights of each node on all others.

    Row ``j`` holds ``Sigma_(j)^{-1} sigma_(j)`` placed at the indices of the
    other nodes; the diagonal is zero.
    """
    S = np.asarray(sigma, dtype=float)
    d = S.shape[0]
    B = np.zeros((d, d))
    for j in range(d):
        others = np.r_[0:j, j + 1 : d]
        B[j, others] = np.linalg.solve(S[np.ix_(others, others)], S[others, j])
    return B
