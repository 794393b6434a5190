"""Forward solution of discovered models by nodal collocation.

A polynomial model over linear operator channels becomes a nodal system
through the operator matrices: each channel of u is a matrix product, and
each library term a pointwise product of channel vectors.  Stationary
problems M(u) = f solve directly when M is affine and by Newton with the
exact polynomial Jacobian otherwise.  Evolution problems du/dt = M(u) - f
use the two-step semi-implicit scheme that treats the pure-Laplacian part
implicitly; its system matrix is factorized once and reused every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from .discovery import SparseModel
from .errors import BlowUpError, IllConditionedError, NonConvergenceError
from .operators import DiscreteOperators


def relative_l2(approx: np.ndarray, exact: np.ndarray) -> float:
    """Relative l2 mismatch sqrt(sum (a-e)^2) / sqrt(sum e^2)."""
    a = np.asarray(approx, dtype=float).ravel()
    e = np.asarray(exact, dtype=float).ravel()
    if a.shape != e.shape:
        raise ValueError("arrays must have matching shapes")
    scale = np.linalg.norm(e)
    if scale == 0.0:
        raise ValueError("reference is identically zero; relative error undefined")
    return float(np.linalg.norm(a - e) / scale)


def _channel_operator(ops: DiscreteOperators, channel) -> np.ndarray | None:
    """Nodal matrix representing a linear channel; None stands for identity."""
    if channel.kind == "u":
        return None
    if channel.kind == "grad":
        return ops.D[channel.component]
    if channel.kind == "lap":
        return ops.L
    if channel.kind == "gradlap":
        return ops.D[channel.component] @ ops.L
    if channel.kind == "bih":
        return ops.L @ ops.L
    raise ValueError(f"channel kind {channel.kind!r} cannot be forward-solved")


class _ModelOperator:
    """Evaluates M(u), its Jacobian, and its affine decomposition."""

    def __init__(self, model: SparseModel, ops: DiscreteOperators):
        if model.kind == "eikonal":
            raise ValueError("eikonal models have no forward solver")
        self.model = model
        self.ops = ops
        self.mats = [_channel_operator(ops, ch) for ch in model.fmap.channels]
        self.active = [i for i, c in enumerate(model.coefficients) if c != 0.0]
        if not self.active:
            raise ValueError("model has no active terms to solve with")
        self.n = ops.n_nodes

    def _channels(self, u: np.ndarray) -> np.ndarray:
        cols = [u if m is None else m @ u for m in self.mats]
        return np.stack(cols, axis=1)

    def apply(self, u: np.ndarray) -> np.ndarray:
        C = self._channels(u)
        out = np.zeros(self.n)
        for t in self.active:
            term = self.model.terms[t]
            col = np.full(self.n, self.model.coefficients[t])
            for c, a in enumerate(term.exponents):
                if a:
                    col = col * C[:, c] ** a
            out += col
        return out

    def jacobian(self, u: np.ndarray) -> np.ndarray:
        C = self._channels(u)
        J = np.zeros((self.n, self.n))
        eye = np.eye(self.n)
        for t in self.active:
            term = self.model.terms[t]
            xi = self.model.coefficients[t]
            for c, a in enumerate(term.exponents):
                if not a:
                    continue
                prod = np.full(self.n, xi * a)
                for c2, a2 in enumerate(term.exponents):
                    power = a2 - (1 if c2 == c else 0)
                    if power:
                        prod = prod * C[:, c2] ** power
                mat = eye if self.mats[c] is None else self.mats[c]
                J += prod[:, None] * mat
        return J

    def affine_parts(self) -> tuple[np.ndarray, np.ndarray, bool]:
        """(linear matrix, constant vector, is_affine) of the model."""
        lin = np.zeros((self.n, self.n))
        const = np.zeros(self.n)
        affine = True
        eye = np.eye(self.n)
        for t in self.active:
            term = self.model.terms[t]
            xi = self.model.coefficients[t]
            if term.degree == 0:
                const += xi
            elif term.degree == 1:
                c = next(i for i, a in enumerate(term.exponents) if a)
                mat = eye if self.mats[c] is None else self.mats[c]
                lin += xi * mat
            else:
                affine = False
        return lin, const, affine


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    """Trajectory of nodal values plus step diagnostics."""

    times: np.ndarray          # (n_steps + 1,)
    values: np.ndarray         # (n_steps + 1, N)
    factorizations: int
    diagnostics: dict = field(default_factory=dict)


def solve_stationary(model: SparseModel, ops: DiscreteOperators,
                     forcing: np.ndarray, tol: float = 1e-10,
                     max_newton: int = 50) -> np.ndarray:
    """Solve M(u) = f at the nodes to max-norm residual tol.

    Affine models solve in one dense factorization.  Otherwise Newton
    iterates from the solution of the degree-<=1 truncation, using the
    exact Jacobian of the polynomial nodal operator.
    """
    f = np.asarray(forcing, dtype=float)
    if f.shape != (ops.n_nodes,):
        raise ValueError(f"forcing must have shape ({ops.n_nodes},)")
    op = _ModelOperator(model, ops)
    lin, const, affine = op.affine_parts()

    def linear_solve(mat, rhs):
        try:
            fac = lu_factor(mat)
        except LinAlgError as exc:
            raise IllConditionedError(f"collocation matrix is singular: {exc}")
        x = lu_solve(fac, rhs)
        # one refinement pass tightens the residual on stiff systems
        x += lu_solve(fac, rhs - mat @ x)
        return x

    if affine:
        u = linear_solve(lin, f - const)
        r = lin @ u + const - f
        if np.max(np.abs(r)) > tol:
            raise IllConditionedError(
                f"linear solve left residual {np.max(np.abs(r)):.3e} > {tol}")
        return u

    # nonlinear: start from the affine truncation when it is solvable
    try:
        u = linear_solve(lin, f - const)
    except IllConditionedError:
        u = np.zeros(ops.n_nodes)
    for _ in range(max_newton):
        r = op.apply(u) - f
        if np.max(np.abs(r)) <= tol:
            return u
        du = linear_solve(op.jacobian(u), r)
        u = u - du
        if not np.all(np.isfinite(u)):
            raise NonConvergenceError("Newton iterate became non-finite")
    r = op.apply(u) - f
    if np.max(np.abs(r)) <= tol:
        return u
    raise NonConvergenceError(
        f"Newton did not reach tolerance {tol} in {max_newton} steps "
        f"(residual {np.max(np.abs(r)):.3e})")


def _forcing_series(forcing, times, n_nodes) -> np.ndarray:
    if forcing is None:
        return np.zeros((len(times), n_nodes))
    if callable(forcing):
        out = np.stack([np.asarray(forcing(t), dtype=float) for t in times])
    else:
        out = np.asarray(forcing, dtype=float)
    if out.shape != (len(times), n_nodes):
        raise ValueError("forcing must provide one nodal vector per time")
    return out


def solve_evolution(model: SparseModel, ops: DiscreteOperators,
                    initial: np.ndarray, dt: float, n_steps: int,
                    forcing=None) -> EvolutionResult:
    """March du/dt = M(u) - f with the two-step semi-implicit scheme.

    The pure-Laplacian term (coefficient a) is implicit; everything else
    is extrapolated explicitly.  The first step bootstraps with one
    semi-implicit Euler step.  Both left-hand matrices are factorized
    exactly once.

        step 1:   (I/dt - a L) u^1 = u^0/dt + N(u^0) - f^0
        step j+1: (3/(2dt) I - a L) u^{j+1}
                   = (4u^j - u^{j-1})/(2dt) + N(2u^j - u^{j-1}) - (2f^j - f^{j-1})
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("need dt > 0 and n_steps >= 1")
    u0 = np.asarray(initial, dtype=float)
    if u0.shape != (ops.n_nodes,):
        raise ValueError(f"initial values must have shape ({ops.n_nodes},)")
    op = _ModelOperator(model, ops)

    # split off the implicit pure-Laplacian coefficient
    lap_channel = next((i for i, ch in enumerate(model.fmap.channels)
                        if ch.kind == "lap"), None)
    a = 0.0
    if lap_channel is not None:
        for t, term in enumerate(model.terms):
            if term.degree == 1 and term.exponents[lap_channel] == 1:
                a = float(model.coefficients[t])
                break

    def explicit_part(u):
        return op.apply(u) - a * (ops.L @ u)

    times = dt * np.arange(n_steps + 1)
    F = _forcing_series(forcing, times, ops.n_nodes)
    eye = np.eye(ops.n_nodes)
    factorizations = 0
    try:
        boot = lu_factor(eye / dt - a * ops.L)
        factorizations += 1
        main = lu_factor(1.5 * eye / dt - a * ops.L)
        factorizations += 1
    except LinAlgError as exc:
        raise IllConditionedError(f"time-step matrix is singular: {exc}")

    blow_scale = 1e8 * max(1.0, float(np.abs(u0).max()))
    values = np.empty((n_steps + 1, ops.n_nodes))
    values[0] = u0
    values[1] = lu_solve(boot, u0 / dt + explicit_part(u0) - F[0])
    if not np.all(np.isfinite(values[1])):
        raise BlowUpError("solution blew up at the bootstrap step")
    for j in range(1, n_steps):
        rhs = ((4.0 * values[j] - values[j - 1]) / (2.0 * dt)
               + explicit_part(2.0 * values[j] - values[j - 1])
               - (2.0 * F[j] - F[j - 1]))
        values[j + 1] = lu_solve(main, rhs)
        if not np.all(np.isfinite(values[j + 1])) or \
                np.abs(values[j + 1]).max() > blow_scale:
            raise BlowUpError(f"solution blew up at step {j + 1} "
                              f"(t = {times[j + 1]:.6g})")
    return EvolutionResult(times, values, factorizations,
                           {"implicit_coefficient": a, "dt": float(dt)})
