import numpy as np
import pytest

from robust_ht.baselines import (
    LassoConfig,
    best_lasso_error,
    kkt_violation,
    lambda_max,
    lasso,
    lasso_grid,
    lasso_objective,
    soft_threshold,
    suggest_step_size,
    top_eigenvalue,
    vanilla_iht,
)
from robust_ht.core import Dataset, SolverConfig
from robust_ht.losses import LossSpec
from robust_ht.robust_mean import RobustMeanSpec
from robust_ht.solver import solve
from robust_ht.synthgen import GenSpec, gen_linear


@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_vanilla_iht_is_plain_mean_solve(eps):
    data, truth = gen_linear(GenSpec(n=150, d=200, k=4, sigma=0.3, epsilon=eps, seed=2))
    cfg = SolverConfig(k_prime=6, max_iters=80)
    a = vanilla_iht(data, LossSpec.squared(), cfg, reference=truth.beta_star)
    b = solve(data, LossSpec.squared(), RobustMeanSpec.plain_mean(), cfg, reference=truth.beta_star)
    assert a.same_as(b)


def test_vanilla_exact_recovery_clean():
    data, truth = gen_linear(GenSpec(n=300, d=1000, k=5, seed=21))
    res = vanilla_iht(data, LossSpec.squared(), SolverConfig(k_prime=5, max_iters=300), reference=truth.beta_star)
    assert res.trace[-1].l2_error <= 1e-6


def test_vanilla_fails_under_corruption():
    errs = []
    for seed in range(20):
        data, truth = gen_linear(GenSpec(n=300, d=1000, k=5, epsilon=0.1, seed=seed))
        res = vanilla_iht(data, LossSpec.squared(), SolverConfig(k_prime=5, max_iters=300), reference=truth.beta_star)
        errs.append(res.trace[-1].l2_error)
    assert np.median(errs) > 0.25
    assert min(errs) > 1e-3


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold([3.0, -0.5, -2.0, 0.0], 1.0), [2.0, 0.0, -1.0, 0.0])


def test_lasso_zero_lambda_is_least_squares():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 8))
    y = rng.standard_normal(8)
    res = lasso(Dataset(X, y), LassoConfig(lam=0.0, max_iters=200_000, tol=1e-9))
    assert res.converged
    assert np.abs(X.T @ (y - X @ res.beta) / 8).max() <= 1e-9
    np.testing.assert_allclose(res.beta, np.linalg.solve(X, y), atol=1e-5)


def test_lasso_large_lambda_is_zero():
    data, _ = gen_linear(GenSpec(n=80, d=30, k=3, sigma=0.5, seed=1))
    lam = lambda_max(data)
    for scale in (1.0, 2.0):
        res = lasso(data, LassoConfig(lam=lam * scale))
        np.testing.assert_array_equal(res.beta, 0.0)
        assert res.converged


def test_lasso_orthonormal_closed_form():
    rng = np.random.default_rng(3)
    n, d = 64, 16
    Q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    X = np.sqrt(n) * Q  # X'X / n = I
    y = X @ np.r_[2.0, -1.5, 0.3, np.zeros(d - 3)] + rng.standard_normal(n)
    for lam in (0.05, 0.4, 1.2):
        res = lasso(Dataset(X, y), LassoConfig(lam=lam, tol=1e-12, max_iters=10_000))
        expected = soft_threshold(X.T @ y / n, lam)
        assert np.abs(res.beta - expected).max() <= 1e-8


def test_lasso_objective_monotone_and_kkt():
    data, _ = gen_linear(GenSpec(n=100, d=200, k=5, sigma=0.5, epsilon=0.1, seed=4))
    cfg = LassoConfig(lam=0.05, max_iters=5000, tol=1e-6)
    res = lasso(data, cfg)
    assert np.all(np.diff(res.objectives) <= 1e-12 * np.abs(res.objectives[:-1]))
    assert res.converged
    assert kkt_violation(data.X, data.y, res.beta, cfg.lam).max() <= 1e-6
    assert res.objectives[-1] == pytest.approx(lasso_objective(data.X, data.y, res.beta, cfg.lam))


def test_lasso_flags_non_convergence():
    data, _ = gen_linear(GenSpec(n=100, d=200, k=5, sigma=0.5, seed=4))
    res = lasso(data, LassoConfig(lam=0.01, max_iters=3, tol=1e-12))
    assert not res.converged and res.iterations == 3


def test_lasso_config_validation():
    with pytest.raises(ValueError):
        LassoConfig(lam=-1.0)


def test_grid_and_best_error():
    data, truth = gen_linear(GenSpec(n=200, d=100, k=5, sigma=0.5, seed=5))
    grid = lasso_grid(data, num=6)
    assert grid[0] == pytest.approx(lambda_max(data)) and np.all(np.diff(grid) < 0)
    best = best_lasso_error(data, truth.beta_star, grid)
    assert best < np.linalg.norm(truth.beta_star)
    errs = [np.linalg.norm(lasso(data, LassoConfig(lam=l, max_iters=20000, tol=1e-4, accelerated=True)).beta
                           - truth.beta_star) for l in grid]
    assert best == pytest.approx(min(errs))


def test_top_eigenvalue_and_step():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((500, 20)) * np.r_[3.0, np.ones(19)]
    exact = np.linalg.eigvalsh(X.T @ X / 500)[-1]
    assert top_eigenvalue(X, 50) == pytest.approx(exact, rel=1e-3)
    assert suggest_step_size(X) == pytest.approx(1 / exact, rel=1e-2)
    assert top_eigenvalue(np.zeros((3, 2))) == 0.0


def test_accelerated_lasso_matches_plain():
    data, _ = gen_linear(GenSpec(n=100, d=200, k=5, sigma=0.5, epsilon=0.1, seed=7))
    plain = lasso(data, LassoConfig(lam=0.05, max_iters=20000, tol=1e-9))
    fast = lasso(data, LassoConfig(lam=0.05, max_iters=20000, tol=1e-9, accelerated=True))
    assert plain.converged and fast.converged
    assert fast.iterations < plain.iterations
    assert np.all(np.diff(fast.objectives) <= 0)
    np.testing.assert_allclose(fast.beta, plain.beta, atol=1e-7)
    assert kkt_violation(data.X, data.y, fast.beta, 0.05).max() <= 1e-9
