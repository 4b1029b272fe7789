"""Seeded synthetic data for sparse regression, classification and graphical models.

Linear, cubic and LDA schemes corrupt the sample by *replacing*
``floor(epsilon * n)`` authentic rows; the graphical-model scheme *appends*
``floor(epsilon * n / (1 - epsilon))`` outlier rows.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Literal, Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import expit

from robust_ht.core import Dataset

Covariance = Literal["identity", "toeplitz_exp"]
Tail = Literal["gaussian", "lognormal", "cauchy_noise"]
Scheme = Literal["linear", "cubic_misspecified", "lda_logistic", "ggm_cluster"]

LOGNORMAL_S2 = 4.0
LDA_OUTLIER_MAGNITUDE = 3.0
GGM_OUTLIER_MEAN = 1.5
GGM_MIN_EIGENVALUE = 0.1


@dataclass(frozen=True)
class GenSpec:
    n: int
    d: int
    k: int = 5
    sigma: float = 0.0
    epsilon: float = 0.0
    covariance: Covariance = "toeplitz_exp"
    tail: Tail = "gaussian"
    scheme: Scheme = "linear"
    v: float = 0.3
    cluster_size: int = 20
    edge_prob: float = 0.3
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "d", "k"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ValueError(f"{name} must be a positive integer, got {val}")
        if self.k > self.d:
            raise ValueError(f"k={self.k} exceeds d={self.d}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")
        if self.covariance not in ("identity", "toeplitz_exp"):
            raise ValueError(f"unknown covariance {self.covariance!r}")
        if self.tail not in ("gaussian", "lognormal", "cauchy_noise"):
            raise ValueError(f"unknown tail {self.tail!r}")
        if self.scheme not in ("linear", "cubic_misspecified", "lda_logistic", "ggm_cluster"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def replace(self, **changes) -> "GenSpec":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GroundTruth:
    beta_star: Optional[np.ndarray]
    support: np.ndarray
    clean_mask: np.ndarray
    n_replaced: int = 0
    n_added: int = 0
    theta: Optional[np.ndarray] = None
    edges: Tuple[Tuple[int, int], ...] = ()

    @property
    def corrupted_rows(self) -> np.ndarray:
        return np.flatnonzero(~self.clean_mask)


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-9))


def replaced_count(n: int, epsilon: float) -> int:
    return _floor(epsilon * n)


def added_count(n: int, epsilon: float) -> int:
    return _floor(epsilon * n / (1.0 - epsilon))


def toeplitz_exp(d: int) -> np.ndarray:
    idx = np.arange(d)
    return np.exp(-np.abs(idx[:, None] - idx[None, :]))


@lru_cache(maxsize=8)
def _sqrt_cov(d: int, covariance: str) -> np.ndarray:
    if covariance == "identity":
        return np.eye(d)
    w, V = np.linalg.eigh(toeplitz_exp(d))
    S = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    S = 0.5 * (S + S.T)
    S.setflags(write=False)
    return S


def covariance_matrix(spec: GenSpec) -> np.ndarray:
    return np.eye(spec.d) if spec.covariance == "identity" else toeplitz_exp(spec.d)


def standardized_lognormal(rng: np.random.Generator, size) -> np.ndarray:
    """Draws of ``(Z - E Z) / sd(Z)`` with ``Z ~ logN(0, 4)``."""
    s2 = LOGNORMAL_S2
    mean = math.exp(s2 / 2)
    sd = math.sqrt((math.exp(s2) - 1.0) * math.exp(s2))
    return (np.exp(math.sqrt(s2) * rng.standard_normal(size)) - mean) / sd


def _sparse_signs(rng, d, k, scale=1.0):
    supp = np.sort(rng.choice(d, size=k, replace=False))
    beta = np.zeros(d)
    beta[supp] = scale * rng.choice([-1.0, 1.0], size=k)
    return beta, supp


def _regression_design(spec: GenSpec, rng):
    heavy = spec.tail == "lognormal"
    if heavy and spec.epsilon > 0:
        raise ValueError("the log-normal heavy-tail design is uncorrupted; set epsilon=0")
    beta, supp = _sparse_signs(rng, spec.d, spec.k)
    raw = standardized_lognormal(rng, (spec.n, spec.d)) if heavy else rng.standard_normal((spec.n, spec.d))
    X = raw @ _sqrt_cov(spec.d, spec.covariance)
    if spec.tail == "lognormal":
        xi = spec.sigma * standardized_lognormal(rng, spec.n)
    elif spec.tail == "cauchy_noise":
        xi = spec.sigma * rng.standard_cauchy(spec.n)
    else:
        xi = spec.sigma * rng.standard_normal(spec.n)
    return X, xi, beta, supp


def _replace_with_rademacher(spec: GenSpec, rng, X, y, beta):
    m = replaced_count(spec.n, spec.epsilon)
    clean = np.ones(spec.n, dtype=bool)
    if m:
        rows = np.sort(rng.choice(spec.n, size=m, replace=False))
        A = rng.choice([-1.0, 1.0], size=(m, spec.d))
        X[rows] = A
        y[rows] = -(A @ beta)
        clean[rows] = False
    return clean, m


def gen_linear(spec: GenSpec) -> Tuple[Dataset, GroundTruth]:
    """Sparse linear model ``y = x'beta + noise`` with Rademacher outliers.

    Outlier rows get i.i.d. +-1 covariates ``a`` and response ``-a'beta``.
    """
    if spec.scheme != "linear":
        raise ValueError(f"gen_linear needs scheme='linear', got {spec.scheme!r}")
    rng = np.random.default_rng(spec.seed)
    X, xi, beta, supp = _regression_design(spec, rng)
    y = X @ beta + xi
    clean, m = _replace_with_rademacher(spec, rng, X, y, beta)
    return Dataset(X, y, "regression"), GroundTruth(beta, supp, clean, n_replaced=m)


def gen_cubic_misspecified(spec: GenSpec) -> Tuple[Dataset, GroundTruth]:
    """Authentic responses ``sum_j x_j**3 beta_j`` (plus noise); outliers as in :func:`gen_linear`."""
    if spec.scheme != "cubic_misspecified":
        raise ValueError(f"gen_cubic_misspecified needs scheme='cubic_misspecified', got {spec.scheme!r}")
    rng = np.random.default_rng(spec.seed)
    X, xi, beta, supp = _regression_design(spec, rng)
    y = cubic_response(X, beta) + xi
    clean, m = _replace_with_rademacher(spec, rng, X, y, beta)
    return Dataset(X, y, "regression"), GroundTruth(beta, supp, clean, n_replaced=m)


def cubic_response(X, beta) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return (X**3) @ np.asarray(beta, dtype=float)


def gen_lda(spec: GenSpec) -> Tuple[Dataset, GroundTruth]:
    """Two-class Gaussian LDA with identity covariance.

    Class means are ``1 +- v`` with ``v`` k-sparse, entries ``+-1/sqrt(k)``;
    the reported parameter is the Bayes direction ``2 v``. Outlier rows
    have +-3 covariates and labels drawn from the reversed logistic model.
    The ``covariance`` and ``tail`` fields are ignored.
    """
    if spec.scheme != "lda_logistic":
        raise ValueError(f"gen_lda needs scheme='lda_logistic', got {spec.scheme!r}")
    rng = np.random.default_rng(spec.seed)
    v, supp = _sparse_signs(rng, spec.d, spec.k, 1.0 / math.sqrt(spec.k))
    beta = 2.0 * v
    y = rng.choice([-1.0, 1.0], size=spec.n)
    X = 1.0 + y[:, None] * v[None, :] + rng.standard_normal((spec.n, spec.d))
    m = replaced_count(spec.n, spec.epsilon)
    clean = np.ones(spec.n, dtype=bool)
    if m:
        rows = np.sort(rng.choice(spec.n, size=m, replace=False))
        A = LDA_OUTLIER_MAGNITUDE * rng.choice([-1.0, 1.0], size=(m, spec.d))
        p_plus = expit(-(A @ beta))
        X[rows] = A
        y[rows] = np.where(rng.random(m) < p_plus, 1.0, -1.0)
        clean[rows] = False
    return Dataset(X, y, "classification"), GroundTruth(beta, supp, clean, n_replaced=m)


def cluster_blocks(d: int, cluster_size: int = 20) -> List[np.ndarray]:
    return np.array_split(np.arange(d), math.ceil(d / cluster_size))


def cluster_precision(d: int, v: float, rng, cluster_size: int = 20, edge_prob: float = 0.3):
    """Block-diagonal precision matrix with value ``v`` on random within-cluster edges.

    The diagonal starts at 1 and is raised uniformly until the smallest
    eigenvalue is at least 0.1.
    """
    theta = np.eye(d)
    edges = []
    for block in cluster_blocks(d, cluster_size):
        for a in range(len(block)):
            for b in range(a + 1, len(block)):
                if rng.random() < edge_prob:
                    i, j = int(block[a]), int(block[b])
                    edges.append((i, j))
                    if v != 0:
                        theta[i, j] = theta[j, i] = v
    lam = float(np.linalg.eigvalsh(theta)[0])
    if lam < GGM_MIN_EIGENVALUE:
        theta[np.diag_indices(d)] += GGM_MIN_EIGENVALUE - lam
    try:
        cholesky(theta, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"precision matrix not positive definite for v={v}") from exc
    if v == 0:
        edges = []
    return theta, tuple(sorted(edges))


def gen_ggm_cluster(spec: GenSpec) -> Tuple[Dataset, GroundTruth]:
    """Cluster-graph Gaussian graphical model plus appended mixture outliers.

    Outliers come from ``0.5 N(mu, I) + 0.5 N(-mu, I)`` with ``mu = 1.5 * 1``
    and are placed after the ``n`` authentic rows.
    """
    if spec.scheme != "ggm_cluster":
        raise ValueError(f"gen_ggm_cluster needs scheme='ggm_cluster', got {spec.scheme!r}")
    rng = np.random.default_rng(spec.seed)
    theta, edges = cluster_precision(spec.d, spec.v, rng, spec.cluster_size, spec.edge_prob)
    L = cholesky(theta, lower=True)
    Z = rng.standard_normal((spec.d, spec.n))
    # L^{-T} z has covariance theta^{-1}
    X = solve_triangular(L.T, Z, lower=False).T
    m = added_count(spec.n, spec.epsilon)
    if m:
        signs = rng.choice([-1.0, 1.0], size=m)
        out = signs[:, None] * GGM_OUTLIER_MEAN + rng.standard_normal((m, spec.d))
        X = np.vstack([X, out])
    clean = np.r_[np.ones(spec.n, dtype=bool), np.zeros(m, dtype=bool)]
    nodes = sorted({i for e in edges for i in e})
    return (
        Dataset(X, None, "unlabeled"),
        GroundTruth(None, np.array(nodes, dtype=int), clean, n_added=m, theta=theta, edges=edges),
    )


def generate(spec: GenSpec) -> Tuple[Dataset, GroundTruth]:
    return {
        "linear": gen_linear,
        "cubic_misspecified": gen_cubic_misspecified,
        "lda_logistic": gen_lda,
        "ggm_cluster": gen_ggm_cluster,
    }[spec.scheme](spec)


def ground_truth_record(spec: GenSpec, truth: GroundTruth) -> dict:
    rec = {
        "spec": dataclasses.asdict(spec),
        "support": [int(i) for i in truth.support],
        "corrupted_rows": [int(i) for i in truth.corrupted_rows],
        "n_replaced": truth.n_replaced,
        "n_added": truth.n_added,
    }
    if truth.beta_star is not None:
        rec["beta_star"] = {str(int(i)): float(truth.beta_star[i]) for i in np.flatnonzero(truth.beta_star)}
    if truth.theta is not None:
        rec["edges"] = [list(e) for e in truth.edges]
        rec["theta_diagonal"] = float(truth.theta[0, 0])
    return rec


def write_ground_truth(spec: GenSpec, truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ground_truth_record(spec, truth), fh, indent=2, sort_keys=True)
        fh.write("\n")
