"""Sparse regression checks.

Oracles: the closed-form soft-threshold solution for orthonormal designs,
hand-computed stationarity violations, plain least squares at mu = 0, and
agreement between two independent solver routes (coordinate descent vs
the projected-gradient QP reformulation).
"""

import numpy as np
import pytest
from scipy.stats import norm as gaussian

from surfpde.errors import (
    EmptyModelError,
    ExactFitError,
    NonConvergenceError,
    OracleScaleExceeded,
)
from surfpde.regression import (
    RegressionProblem,
    default_sqrt_mu,
    kkt_check,
    lasso,
    lasso_qp_oracle,
    sqrt_lasso,
    threshold_and_refit,
)


def soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def test_identity_design_soft_threshold():
    problem = RegressionProblem(np.eye(2), np.array([3.0, 0.01]), mu=1.0)
    sol = lasso(problem)
    assert np.allclose(sol.coefficients, [2.5, 0.0], atol=1e-12)
    assert sol.support == (0,)


def test_orthonormal_design_closed_form():
    rng = np.random.default_rng(0)
    for trial in range(10):
        A, _ = np.linalg.qr(rng.normal(size=(40, 8)))
        b = rng.normal(size=40) * 2.0
        mu = float(rng.uniform(0.05, 2.0))
        sol = lasso(RegressionProblem(A, b, mu))
        exact = soft(A.T @ b, mu / 2.0)
        assert np.max(np.abs(sol.coefficients - exact)) < 1e-10


def test_mu_zero_matches_least_squares():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(30, 6))
    b = rng.normal(size=30)
    sol = lasso(RegressionProblem(A, b, 0.0))
    exact, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.max(np.abs(sol.coefficients - exact)) < 1e-8


def test_objective_never_increases():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(25, 12))
    b = rng.normal(size=25)
    sol = lasso(RegressionProblem(A, b, 0.5))
    trace = np.array(sol.diagnostics["objective_trace"])
    assert np.all(np.diff(trace) <= 1e-12 * np.maximum(1.0, np.abs(trace[:-1])))


def test_large_mu_gives_zero_solution():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(20, 7))
    b = rng.normal(size=20)
    mu = 2.0001 * float(np.abs(A.T @ b).max())
    sol = lasso(RegressionProblem(A, b, mu))
    assert np.all(sol.coefficients == 0.0)
    assert sol.support == ()


def test_coordinate_descent_matches_qp_oracle():
    rng = np.random.default_rng(4)
    for trial in range(25):
        m, n = 30, 10
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m) * 2.0
        mu = float(rng.uniform(0.05, 5.0))
        problem = RegressionProblem(A, b, mu)
        cd = lasso(problem, tol=1e-10)
        qp = lasso_qp_oracle(problem, tol=1e-10)
        assert np.max(np.abs(cd.coefficients - qp.coefficients)) < 1e-6
        scale = cd.diagnostics["grad_scale"]
        assert cd.kkt_residual <= 10 * 1e-10 * scale
        assert qp.kkt_residual <= 10 * 1e-10 * scale


def test_qp_oracle_rejects_large_problems():
    A = np.ones((10, 65))
    with pytest.raises(OracleScaleExceeded):
        lasso_qp_oracle(RegressionProblem(A, np.ones(10), 1.0))


def test_column_normalization_is_equivalent_to_prescaling():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(30, 5)) * np.array([1.0, 1e6, 1e-6, 10.0, 0.1])
    b = rng.normal(size=30)
    mu = 0.3
    sol = lasso(RegressionProblem(A, b, mu, normalize_columns=True))
    scales = np.linalg.norm(A, axis=0)
    manual = lasso(RegressionProblem(A / scales, b, mu))
    assert np.allclose(sol.coefficients, manual.coefficients / scales,
                       rtol=1e-10, atol=1e-14)


def test_kkt_check_hand_values():
    problem = RegressionProblem(np.eye(2), np.array([3.0, 0.01]), mu=1.0)
    # gradient at (2.5, 0) is (-1, -0.02): active coordinate cancels the
    # penalty sign exactly, inactive one is within the mu tube
    assert np.allclose(kkt_check(problem, [2.5, 0.0]), [0.0, 0.0], atol=1e-14)
    assert np.allclose(kkt_check(problem, [2.4, 0.0]), [0.2, 0.0], atol=1e-14)


def test_nonconvergence_raises():
    rng = np.random.default_rng(6)
    base = rng.normal(size=(40, 1))
    A = base + 0.01 * rng.normal(size=(40, 8))   # highly correlated columns
    b = rng.normal(size=40)
    with pytest.raises(NonConvergenceError):
        lasso(RegressionProblem(A, b, 0.01), tol=1e-12, max_sweeps=1)


def test_exact_duplicate_columns_converge_without_collapse():
    rng = np.random.default_rng(7)
    a = rng.normal(size=30)
    a /= np.linalg.norm(a)
    c = rng.normal(size=30)
    c -= (c @ a) * a
    c /= np.linalg.norm(c)
    A = np.column_stack([a, a, c])
    sol = lasso(RegressionProblem(A, 2.0 * a + 0.3 * c, 1e-6))
    assert sol.diagnostics["collapsed_columns"] == []
    assert abs(sol.coefficients[1]) < 1e-12
    assert abs(sol.coefficients[0] - 2.0) < 1e-5


def test_near_duplicate_columns_collapse_on_stall():
    # a twin pair separated by 3e-4 rebalances at a rate of about 1e-7
    # per sweep, far beyond any sweep budget; the collapse fallback must
    # pin one twin and still fit the data
    rng = np.random.default_rng(8)
    q, _ = np.linalg.qr(rng.normal(size=(40, 3)))
    u, v, w = q.T
    twin = u + 3e-4 * v
    twin /= np.linalg.norm(twin)
    A = np.column_stack([u, twin, w])
    b = u + twin + 0.3 * w
    sol = lasso(RegressionProblem(A, b, 1e-8), max_sweeps=2000)
    assert sol.diagnostics["collapsed_columns"] == [[0, 1]] \
        or sol.diagnostics["collapsed_columns"] == [[1, 0]]
    kept, dropped = sol.diagnostics["collapsed_columns"][0]
    assert sol.coefficients[dropped] == 0.0
    assert abs(sol.coefficients[kept] - 2.0) < 1e-3
    assert np.linalg.norm(A @ sol.coefficients - b) < 1e-3


# --- scale-adaptive variant ---------------------------------------------------

def test_sqrt_lasso_default_mu_formula():
    assert default_sqrt_mu(100, 20) == pytest.approx(
        1.1 / 10.0 * gaussian.ppf(1 - 0.05 / 40.0), rel=1e-12)


def test_sqrt_lasso_recovers_sparse_truth():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(80, 6))
    xi_true = np.array([2.0, 0.0, 0.0, -1.0, 0.0, 0.0])
    b = A @ xi_true + 0.01 * rng.normal(size=80)
    sol = sqrt_lasso(RegressionProblem(A, b, mu=None))
    assert sol.method == "sqrt_lasso"
    assert {0, 3} <= set(sol.support)
    assert np.max(np.abs(sol.coefficients - xi_true)) < 0.1
    resid = A @ sol.coefficients - b
    sigma = np.linalg.norm(resid) / np.sqrt(80)
    assert sol.diagnostics["sigma"] == pytest.approx(sigma, rel=1e-6)
    assert sol.diagnostics["outer_iterations"] < 100


def test_sqrt_lasso_exact_fit_raises():
    with pytest.raises(ExactFitError):
        sqrt_lasso(RegressionProblem(np.eye(3), np.zeros(3), mu=None))


# --- thresholded refit ----------------------------------------------------------

def test_threshold_and_refit_drops_and_refits():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(20, 5))
    b = rng.normal(size=20)
    problem = RegressionProblem(A, b, 0.1)
    sol = lasso(problem)
    fake = SparseSolutionLike(sol, np.array([1.0, 1e-6, 0.0, 0.5, 0.0]))
    refit = threshold_and_refit(problem, fake, rel_tol=1e-4)
    assert refit.support == (0, 3)
    exact, *_ = np.linalg.lstsq(A[:, [0, 3]], b, rcond=None)
    assert np.allclose(refit.coefficients[[0, 3]], exact, atol=1e-12)
    assert refit.coefficients[1] == 0.0 and refit.coefficients[2] == 0.0


def SparseSolutionLike(sol, coefficients):
    from surfpde.regression import SparseSolution
    return SparseSolution(coefficients, tuple(np.flatnonzero(coefficients)),
                          sol.objective, sol.kkt_residual, sol.sweeps,
                          sol.method, sol.diagnostics)


def test_threshold_and_refit_empty_model():
    A = np.eye(3)
    problem = RegressionProblem(A, np.zeros(3), 10.0)
    sol = lasso(problem)
    with pytest.raises(EmptyModelError):
        threshold_and_refit(problem, sol)


# --- validation ------------------------------------------------------------------

def test_problem_validation():
    with pytest.raises(ValueError):
        RegressionProblem(np.eye(3), np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        RegressionProblem(np.eye(3), np.zeros(3), -1.0)
    with pytest.raises(ValueError):
        RegressionProblem(np.full((3, 3), np.nan), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        lasso(RegressionProblem(np.eye(3), np.zeros(3), mu=None))
