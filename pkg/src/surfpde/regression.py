"""Sparse linear regression: L1-penalized least squares and helpers.

The working objective throughout is

    F(xi) = || A xi - b ||_2^2 + mu * || xi ||_1

(no 1/2 or 1/M scaling), minimized by cyclic coordinate descent with the
soft-threshold update xi_j <- S(A_j^T r_j, mu/2) / ||A_j||^2.  A
bound-constrained quadratic-program reformulation solved by projected
gradient serves as an independent cross-check on small problems.  A
scale-adaptive variant re-solves with mu_eff proportional to the current
residual scale, removing the need to tune mu to the noise level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _gaussian

from .errors import (
    EmptyModelError,
    ExactFitError,
    NonConvergenceError,
    OracleScaleExceeded,
)


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Design matrix, target vector, penalty, and scaling policy.

    With ``normalize_columns`` the solvers work on unit-norm columns and
    map coefficients back; the penalty then acts on the scaled
    coefficients, which keeps term selection independent of column units.
    ``mu=None`` is only meaningful for the scale-adaptive solver, which
    substitutes a quantile-based default.
    """

    design: np.ndarray
    target: np.ndarray
    mu: float | None = 0.0
    normalize_columns: bool = False

    def __post_init__(self):
        A = np.asarray(self.design, dtype=float)
        b = np.asarray(self.target, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("design must be a nonempty 2-d matrix")
        if b.shape != (A.shape[0],):
            raise ValueError("target length must match design rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("design and target must be finite")
        if self.mu is not None and (not np.isfinite(self.mu) or self.mu < 0):
            raise ValueError("mu must be a nonnegative number or None")
        object.__setattr__(self, "design", A)
        object.__setattr__(self, "target", b)

    @property
    def n_rows(self) -> int:
        return self.design.shape[0]

    @property
    def n_terms(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True, eq=False)
class SparseSolution:
    """Coefficients plus solver diagnostics."""

    coefficients: np.ndarray
    support: tuple[int, ...]
    objective: float
    kkt_residual: float
    sweeps: int
    method: str
    diagnostics: dict = field(default_factory=dict)


def _column_scaling(problem: RegressionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Return (possibly scaled design, per-column scales)."""
    A = problem.design
    if not problem.normalize_columns:
        return A, np.ones(A.shape[1])
    # factor out the peak before squaring: high-order columns can hold
    # entries beyond 1e154, where norm() itself would overflow
    peak = np.max(np.abs(A), axis=0)
    safe = np.where(peak > 0, peak, 1.0)
    scales = safe * np.linalg.norm(A / safe, axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    return A / scales, scales


def _objective(A: np.ndarray, b: np.ndarray, mu: float, xi: np.ndarray) -> float:
    r = A @ xi - b
    return float(r @ r + mu * np.abs(xi).sum())


def _soft(v: float, t: float) -> float:
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


def kkt_check(problem: RegressionProblem, xi) -> np.ndarray:
    """Per-coefficient violation of the L1 stationarity conditions.

    With g = 2 A^T (A xi - b): active coordinates must satisfy
    g_j = -mu sign(xi_j) exactly; inactive ones need |g_j| <= mu.
    """
    if problem.mu is None:
        raise ValueError("kkt_check needs a numeric mu")
    xi = np.asarray(xi, dtype=float)
    A, scales = _column_scaling(problem)
    xi_scaled = xi * scales
    g = 2.0 * (A.T @ (A @ xi_scaled - problem.target))
    viol = np.where(
        xi_scaled != 0.0,
        np.abs(g + problem.mu * np.sign(xi_scaled)),
        np.maximum(0.0, np.abs(g) - problem.mu))
    return viol


def lasso(problem: RegressionProblem, tol: float = 1e-10,
          max_sweeps: int = 100000) -> SparseSolution:
    """Cyclic coordinate descent from xi = 0.

    A sweep updates every coordinate once.  Sweeping stops when the
    largest coordinate change falls to tol (relative to the coefficient
    scale) *and* the stationarity violation is within 10 tol of the
    problem's gradient scale; the objective never increases.

    The sweeps run against the precomputed Gram matrix A^T A and
    correlations A^T b, so each coordinate update costs O(n) regardless
    of the number of rows; the tall snapshot systems would otherwise
    spend O(rows) per update.

    If the sweeps stall, near-duplicate columns are collapsed onto one
    representative each (chosen by correlation with the target) and the
    descent restarts; the pinned column indices are reported under
    ``collapsed_columns`` in the diagnostics.
    """
    if problem.mu is None:
        raise ValueError("lasso needs a numeric mu; got None")
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, scales = _column_scaling(problem)
    b = problem.target
    mu = problem.mu
    n = problem.n_terms
    gram = A.T @ A
    corr = A.T @ b
    btb = float(b @ b)
    col_sq = np.diag(gram).copy()
    grad_scale = max(1.0, float(np.abs(2.0 * corr).max()))

    def sweep_to_convergence(active):
        xi = np.zeros(n)
        q = np.zeros(n)                # gram @ xi, maintained incrementally
        trace = []
        sweeps = 0
        while sweeps < max_sweeps:
            sweeps += 1
            max_change = 0.0
            for j in range(n):
                if not active[j] or col_sq[j] == 0.0:
                    continue
                cj = corr[j] - q[j] + col_sq[j] * xi[j]
                new = _soft(cj, mu / 2.0) / col_sq[j]
                delta = new - xi[j]
                if delta != 0.0:
                    q += delta * gram[:, j]
                    xi[j] = new
                    max_change = max(max_change, abs(delta))
            trace.append(
                float(xi @ q - 2.0 * (corr @ xi) + btb + mu * np.abs(xi).sum()))
            if max_change <= tol * max(1.0, float(np.abs(xi).max())):
                g = 2.0 * (q - corr)
                viol = np.where(xi != 0.0, np.abs(g + mu * np.sign(xi)),
                                np.maximum(0.0, np.abs(g) - mu))
                if float(np.where(active, viol, 0.0).max()) <= 10.0 * tol * grad_scale:
                    return xi, trace, sweeps, True
        return xi, trace, sweeps, False

    active = np.ones(n, dtype=bool)
    xi, objective_trace, sweeps, converged = sweep_to_convergence(active)
    collapsed = []
    if not converged:
        # near-duplicate columns make the descent crawl: progress per sweep
        # scales with their separation.  Keep one representative per
        # duplicate cluster and sweep again, widening the duplication
        # tolerance while the stall persists; any optimum splits weight
        # among near-duplicates with almost the same fit, so pinning all
        # but one moves the objective only at the duplication tolerance.
        denom = np.sqrt(np.outer(col_sq, col_sq))
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.abs(np.where(denom > 0, gram / denom, 0.0))
        order = [int(j) for j in np.argsort(-np.abs(corr), kind="stable")]
        for gap in (1e-6, 1e-3, 1e-1):
            reps: list[int] = []
            shrunk = False
            for j in order:
                if not active[j]:
                    continue
                twins = [r for r in reps if cos[j, r] > 1.0 - gap]
                if twins:
                    active[j] = False
                    collapsed.append([twins[0], j])
                    shrunk = True
                else:
                    reps.append(j)
            if not shrunk:
                continue
            xi, retrace, resweeps, converged = sweep_to_convergence(active)
            objective_trace += retrace
            sweeps += resweeps
            if converged:
                break
    if not converged:
        raise NonConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps; "
            "the columns are strongly correlated at this penalty level: "
            "try normalize=True, a larger mu, or fewer library terms")

    xi_out = xi / scales
    kkt = float(kkt_check(problem, xi_out).max())
    support = tuple(int(j) for j in np.flatnonzero(xi_out))
    return SparseSolution(
        xi_out, support, _objective(A, b, mu, xi), kkt, sweeps, "lasso",
        {"objective_trace": objective_trace, "grad_scale": grad_scale,
         "collapsed_columns": collapsed})


def _project_pairs(x: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project each (x_j, t_j) onto the feasible cone {|x| <= t}."""
    ax = np.abs(x)
    inside = ax <= t
    collapse = ax <= -t
    m = 0.5 * (ax + t)
    px = np.where(inside, x, np.sign(x) * m)
    pt = np.where(inside, t, m)
    px = np.where(collapse, 0.0, px)
    pt = np.where(collapse, 0.0, pt)
    return px, pt


def lasso_qp_oracle(problem: RegressionProblem, tol: float = 1e-10,
                    max_iter: int = 400000) -> SparseSolution:
    """Reference solver through the bound-constrained QP reformulation.

    Minimizes ||A xi - b||^2 + mu sum(gamma) subject to -gamma <= xi <=
    gamma by accelerated projected gradient.  Intended as an independent
    cross-check on small problems only (at most 64 terms).
    """
    if problem.mu is None:
        raise ValueError("lasso_qp_oracle needs a numeric mu")
    n = problem.n_terms
    if n > 64:
        raise OracleScaleExceeded(f"QP oracle supports up to 64 terms, got {n}")
    A, scales = _column_scaling(problem)
    b = problem.target
    mu = problem.mu
    lip = 2.0 * np.linalg.norm(A, 2) ** 2
    if lip == 0.0:
        zeros = np.zeros(n)
        return SparseSolution(zeros, (), _objective(A, b, mu, zeros), 0.0, 0,
                              "qp_oracle", {})
    grad_scale = max(1.0, float(np.abs(2.0 * (A.T @ b)).max()))

    def qp_objective(x, t):
        r = A @ x - b
        return float(r @ r + mu * t.sum())

    x = np.zeros(n)
    t = np.zeros(n)
    yx, yt = x.copy(), t.copy()
    momentum = 1.0
    best_obj = qp_objective(x, t)
    it = 0
    while it < max_iter:
        it += 1
        grad = 2.0 * (A.T @ (A @ yx - b))
        px, pt = _project_pairs(yx - grad / lip, yt - mu / lip)
        obj = qp_objective(px, pt)
        if obj > best_obj + 1e-15 * max(1.0, abs(best_obj)):
            # adaptive restart: drop momentum and retry from the last iterate
            yx, yt = x.copy(), t.copy()
            momentum = 1.0
            continue
        best_obj = min(best_obj, obj)
        next_momentum = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum ** 2))
        beta = (momentum - 1.0) / next_momentum
        yx = px + beta * (px - x)
        yt = pt + beta * (pt - t)
        x, t = px, pt
        momentum = next_momentum
        if it % 50 == 0 or it == 1:
            g = 2.0 * (A.T @ (A @ x - b))
            viol = np.where(x != 0.0, np.abs(g + mu * np.sign(x)),
                            np.maximum(0.0, np.abs(g) - mu))
            if float(viol.max()) <= 10.0 * tol * grad_scale:
                break
    else:
        raise NonConvergenceError(
            f"QP oracle did not reach stationarity in {max_iter} iterations")

    xi_out = x / scales
    kkt = float(kkt_check(problem, xi_out).max())
    support = tuple(int(j) for j in np.flatnonzero(xi_out))
    return SparseSolution(xi_out, support, _objective(A, b, mu, x), kkt, it,
                          "qp_oracle", {})


def default_sqrt_mu(n_rows: int, n_terms: int) -> float:
    """Quantile-based penalty level for the scale-adaptive solver."""
    return 1.1 / np.sqrt(n_rows) * float(_gaussian.ppf(1.0 - 0.05 / (2.0 * n_terms)))


def sqrt_lasso(problem: RegressionProblem, tol: float = 1e-10,
               sigma_tol: float = 1e-8, max_outer: int = 100) -> SparseSolution:
    """Scale-adaptive L1 regression by alternating residual-scale updates.

    Repeats: sigma <- ||A xi - b|| / sqrt(M), then an L1 solve with
    mu_eff = mu * sigma * sqrt(M), until sigma stops moving.  A zero
    residual leaves the scale undefined and raises ExactFitError.
    """
    M = problem.n_rows
    mu = problem.mu if problem.mu is not None else default_sqrt_mu(M, problem.n_terms)
    if mu <= 0:
        raise ValueError("scale-adaptive solver needs mu > 0")
    sigma = float(np.linalg.norm(problem.target)) / np.sqrt(M)
    if sigma == 0.0:
        raise ExactFitError("target is identically zero; residual scale undefined")
    sol = None
    total_sweeps = 0
    for outer in range(1, max_outer + 1):
        inner = RegressionProblem(problem.design, problem.target,
                                  mu * sigma * np.sqrt(M), problem.normalize_columns)
        sol = lasso(inner, tol=tol)
        total_sweeps += sol.sweeps
        resid = problem.design @ sol.coefficients - problem.target
        new_sigma = float(np.linalg.norm(resid)) / np.sqrt(M)
        if new_sigma == 0.0:
            raise ExactFitError("exact fit reached; residual scale collapsed to zero")
        if abs(new_sigma - sigma) <= sigma_tol * max(sigma, 1.0):
            sigma = new_sigma
            break
        sigma = new_sigma
    else:
        raise NonConvergenceError(
            f"residual scale did not settle in {max_outer} outer iterations")
    return SparseSolution(
        sol.coefficients, sol.support, sol.objective, sol.kkt_residual,
        total_sweeps, "sqrt_lasso",
        {"sigma": sigma, "mu": mu, "mu_eff": mu * sigma * np.sqrt(M),
         "outer_iterations": outer})


def threshold_and_refit(problem: RegressionProblem, solution: SparseSolution,
                        rel_tol: float = 1e-4) -> SparseSolution:
    """Drop relatively tiny coefficients and least-squares refit the rest.

    Coefficients below rel_tol times the largest magnitude are zeroed;
    the survivors are refit without any penalty on the original
    (unnormalized) columns.
    """
    if rel_tol < 0:
        raise ValueError("rel_tol must be nonnegative")
    xi = np.asarray(solution.coefficients, dtype=float)
    peak = float(np.abs(xi).max()) if xi.size else 0.0
    if peak == 0.0:
        raise EmptyModelError("no nonzero coefficients to keep")
    keep = np.flatnonzero(np.abs(xi) >= rel_tol * peak)
    if keep.size == 0:
        raise EmptyModelError("thresholding removed every term")
    A = problem.design
    refit, *_ = np.linalg.lstsq(A[:, keep], problem.target, rcond=None)
    out = np.zeros_like(xi)
    out[keep] = refit
    mu = problem.mu if problem.mu is not None else 0.0
    return SparseSolution(
        out, tuple(int(j) for j in keep),
        _objective(A, problem.target, mu, out), float(kkt_check(
            RegressionProblem(A, problem.target, mu), out).max()),
        solution.sweeps, solution.method + "+refit",
        dict(solution.diagnostics))
