"""Sparse identification of surface PDEs from sampled data.

Four pipelines share the same skeleton: evaluate a feature library over
the samples, regress a target onto it with an L1 penalty, and prune tiny
coefficients with an unpenalized refit.

Conventions.  Stationary problems are M(u) = f with f given, so the
regression target is f and the recovered coefficients describe M.
Evolution problems are du/dt = M(u) - f; snapshots enter through the
two-step semi-implicit stencil, one regression row block per interior
time index.  Eikonal problems regress the candidate operators onto the
constant 1 and then explain the leftover residual with a sparse
combination of Gaussian bumps centered at the nodes, whose strongest
center localizes the source.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSnapshots
from .features import (
    Channel,
    FeatureLibrary,
    FeatureMap,
    FeatureTerm,
    assemble_library,
    biharmonic_map,
    build_library,
    eikonal_library,
    enumerate_terms,
    sbdf2_channels,
    standard_map,
)
from .geometry import PointCloud
from .kernels import KernelSpec, kernel_matrix
from .operators import DiscreteOperators, build_operators, interpolate
from .regression import (
    RegressionProblem,
    SparseSolution,
    lasso,
    sqrt_lasso,
    threshold_and_refit,
)

_KINDS = ("stationary", "evolution", "eikonal", "biharmonic")


@dataclass(frozen=True, eq=False)
class Snapshots:
    """Uniformly spaced time series of nodal values with forcing."""

    cloud: PointCloud
    times: np.ndarray          # (M+1,)
    values: np.ndarray         # (M+1, N)
    forcing: np.ndarray        # (M+1, N)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        forcing = np.asarray(self.forcing, dtype=float)
        if times.ndim != 1 or len(times) < 3:
            raise InsufficientSnapshots("need at least 3 snapshots")
        if values.shape != (len(times), self.cloud.n_nodes):
            raise ValueError("values must have shape (n_times, n_nodes)")
        if forcing.shape != values.shape:
            raise ValueError("forcing must match values in shape")
        steps = np.diff(times)
        if steps[0] <= 0 or np.any(np.abs(steps - steps[0]) > 1e-9 * steps[0]):
            raise ValueError("times must be uniformly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(forcing))):
            raise ValueError("snapshots must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "forcing", forcing)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1


@dataclass(frozen=True, eq=False)
class SparseModel:
    """A discovered operator: terms, coefficients, and provenance knobs."""

    kind: str
    kernel: KernelSpec
    fmap: FeatureMap
    ell: int
    terms: tuple[FeatureTerm, ...]
    coefficients: np.ndarray
    regularization: dict
    diagnostics: dict = field(default_factory=dict)
    dt: float | None = None
    source: tuple[dict, ...] | None = None   # eikonal bump centers

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        coeff = np.asarray(self.coefficients, dtype=float)
        if coeff.shape != (len(self.terms),):
            raise ValueError("coefficients must align with terms")
        object.__setattr__(self, "coefficients", coeff)

    def nonzero_terms(self) -> list[tuple[str, float]]:
        return [(t.label, float(c)) for t, c in zip(self.terms, self.coefficients)
                if c != 0.0]

    @property
    def support_labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.nonzero_terms())


def equation_string(model: SparseModel) -> str:
    """Human-readable rendering of the discovered equation."""
    parts = []
    for label, c in model.nonzero_terms():
        sign = "-" if c < 0 else "+"
        head = f"{abs(c):.6g}" if label == "1" else f"{abs(c):.6g}*{label}"
        parts.append(f"{sign} {head}")
    rhs = " ".join(parts) if parts else "0"
    if rhs.startswith("+ "):
        rhs = rhs[2:]
    if model.kind == "evolution":
        return f"du/dt = {rhs} - f"
    if model.kind == "eikonal":
        eq = f"{rhs} = 1"
        if model.source:
            top = model.source[0]
            eq += f" {'-' if top['coefficient'] < 0 else '+'} " \
                  f"{abs(top['coefficient']):.6g}*gauss@node{top['node']}"
            if len(model.source) > 1:
                eq += f" + ({len(model.source) - 1} weaker bumps)"
        return eq
    return f"f = {rhs}"


def add_noise(values: np.ndarray, level: float, seed: int) -> np.ndarray:
    """Add i.i.d. Gaussian noise with std = level * RMS of the values."""
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    values = np.asarray(values, dtype=float)
    if level == 0:
        return values.copy()
    rms = float(np.sqrt(np.mean(values ** 2)))
    rng = np.random.default_rng(seed)
    return values + rng.normal(0.0, level * rms, size=values.shape)


def _solve_sparse(A: np.ndarray, b: np.ndarray, mu: float | None, method: str,
                  prune_tol: float, normalize: bool) -> tuple[SparseSolution, dict]:
    """Shared regression stage: L1 solve (or plain lstsq at mu=0) + prune."""
    problem = RegressionProblem(A, b, mu, normalize_columns=normalize)
    if method == "sqrt_lasso":
        sol = sqrt_lasso(problem)
    elif mu == 0.0:
        # unpenalized objective; solve the least-squares problem directly
        coeff, *_ = np.linalg.lstsq(A, b, rcond=None)
        sol = SparseSolution(coeff, tuple(int(j) for j in np.flatnonzero(coeff)),
                             float(np.sum((A @ coeff - b) ** 2)), float("nan"),
                             0, "lstsq", {})
    else:
        sol = lasso(problem)
    # prune to a fixed point: a kept term whose refit value collapses below
    # the threshold is dropped on the next pass; support shrinks monotonically
    refit = threshold_and_refit(problem, sol, rel_tol=prune_tol)
    while True:
        again = threshold_and_refit(problem, refit, rel_tol=prune_tol)
        if again.support == refit.support:
            refit = again
            break
        refit = again
    resid = A @ refit.coefficients - b
    diag = {
        "method": sol.method,
        "sweeps": int(sol.sweeps),
        "train_rows": int(A.shape[0]),
        "residual_norm": float(np.linalg.norm(resid)),
        "target_norm": float(np.linalg.norm(b)),
    }
    if np.isfinite(sol.kkt_residual):
        diag["kkt_residual"] = float(sol.kkt_residual)
    if sol.method == "sqrt_lasso":
        diag["sigma"] = float(sol.diagnostics["sigma"])
        diag["mu_eff"] = float(sol.diagnostics["mu_eff"])
    return refit, diag


def _interp_diagnostics(ops: DiscreteOperators, interp) -> dict:
    return {
        "interp_residual": float(interp.residual),
        "ill_conditioned": bool(interp.ill_conditioned),
        "jitter": float(ops.jitter),
    }


def discover_stationary(cloud: PointCloud, samples: np.ndarray,
                        forcing: np.ndarray, kernel: KernelSpec, ell: int = 2,
                        mu: float = 0.01, method: str = "lasso",
                        prune_tol: float = 1e-4, normalize: bool = False,
                        ops: DiscreteOperators | None = None) -> SparseModel:
    """Identify M in M(u) = f from one sampled field and its forcing."""
    t0 = time.perf_counter()
    if ops is None:
        ops = build_operators(cloud, kernel)
    interp = interpolate(ops, samples)
    fmap = standard_map(cloud.dim)
    lib = build_library(ops, interp, fmap, ell)
    b = np.asarray(forcing, dtype=float)
    if b.shape != (cloud.n_nodes,):
        raise ValueError("forcing must be a nodal vector")
    sol, diag = _solve_sparse(lib.matrix, b, mu, method, prune_tol, normalize)
    diag.update(_interp_diagnostics(ops, interp))
    diag["runtime"] = time.perf_counter() - t0
    diag["seed"] = cloud.seed
    return SparseModel("stationary", kernel, fmap, ell, lib.terms,
                       sol.coefficients,
                       {"method": method, "mu": mu, "prune_tol": prune_tol,
                        "normalize_columns": normalize}, diag)


def discover_biharmonic(cloud: PointCloud, samples: np.ndarray,
                        forcing: np.ndarray, kernel: KernelSpec, ell: int = 2,
                        mu: float = 0.01, method: str = "lasso",
                        prune_tol: float = 1e-4, normalize: bool = False,
                        ops: DiscreteOperators | None = None) -> SparseModel:
    """Identify M(u) = f over the extended library with fourth-order terms."""
    t0 = time.perf_counter()
    if ops is None:
        ops = build_operators(cloud, kernel)
    interp = interpolate(ops, samples)
    fmap = biharmonic_map(cloud.dim)
    lib = build_library(ops, interp, fmap, ell)
    b = np.asarray(forcing, dtype=float)
    if b.shape != (cloud.n_nodes,):
        raise ValueError("forcing must be a nodal vector")
    sol, diag = _solve_sparse(lib.matrix, b, mu, method, prune_tol, normalize)
    diag.update(_interp_diagnostics(ops, interp))
    diag["runtime"] = time.perf_counter() - t0
    diag["seed"] = cloud.seed
    return SparseModel("biharmonic", kernel, fmap, ell, lib.terms,
                       sol.coefficients,
                       {"method": method, "mu": mu, "prune_tol": prune_tol,
                        "normalize_columns": normalize}, diag)


def discover_evolution(snapshots: Snapshots, kernel: KernelSpec, ell: int = 2,
                       mu: float = 0.0, method: str = "lasso",
                       prune_tol: float = 1e-4, normalize: bool = True,
                       ops: DiscreteOperators | None = None) -> SparseModel:
    """Identify M in du/dt = M(u) - f from a uniform snapshot series."""
    t0 = time.perf_counter()
    cloud = snapshots.cloud
    if ops is None:
        ops = build_operators(cloud, kernel)
    fmap = standard_map(cloud.dim)
    terms = enumerate_terms(fmap, ell)
    blocks, targets = [], []
    for j in range(1, snapshots.n_steps):
        channels, target = sbdf2_channels(ops, snapshots.values,
                                          snapshots.forcing, snapshots.dt, j)
        blocks.append(assemble_library(channels, terms))
        targets.append(target)
    A = np.concatenate(blocks, axis=0)
    b = np.concatenate(targets)
    sol, diag = _solve_sparse(A, b, mu, method, prune_tol, normalize)
    diag["snapshot_rows"] = snapshots.n_steps - 1
    diag["runtime"] = time.perf_counter() - t0
    diag["seed"] = cloud.seed
    return SparseModel("evolution", kernel, fmap, ell, tuple(terms),
                       sol.coefficients,
                       {"method": method, "mu": mu, "prune_tol": prune_tol,
                        "normalize_columns": normalize}, diag,
                       dt=snapshots.dt)


def discover_eikonal(cloud: PointCloud, samples: np.ndarray, kernel: KernelSpec,
                     p_values, mu1: float = 1e-3, mu2: float = 1e-3,
                     sigma2: float = 1.0, squared_exponent: bool = True,
                     normalize: bool = True,
                     ops: DiscreteOperators | None = None) -> SparseModel:
    """Identify a p-Laplacian combination balancing 1, plus a sparse source.

    Stage one regresses [u, plap_{p}(u), ...] onto the constant 1 with
    normalized columns (the high-p columns differ from u by many orders
    of magnitude).  Stage two fits the stage-one residual with Gaussian
    bumps exp(-|x - x_i|^2 / sigma2) centered at the nodes; the dominant
    bump marks the source.  ``squared_exponent=False`` switches the bumps
    to exp(-|x - x_i| / sigma2).  The bump Gram matrix is near-singular
    for wide bumps, where coordinate descent grinds; stage two therefore
    runs at a looser tolerance than the model fit, which is harmless
    because only the ranking of the bump amplitudes is consumed.
    """
    t0 = time.perf_counter()
    if ops is None:
        ops = build_operators(cloud, kernel)
    interp = interpolate(ops, samples)
    lib = eikonal_library(ops, interp, p_values)
    ones = np.ones(cloud.n_nodes)
    degenerate = not np.any(lib.matrix)
    if degenerate:
        # u identically zero: every candidate column vanishes, the fit is
        # unconstrained, and the residual is -1 everywhere
        warnings.warn("all library columns are zero (distance data required); "
                      "model is degenerate", RuntimeWarning)
        sol = SparseSolution(np.zeros(lib.matrix.shape[1]), (), float(cloud.n_nodes),
                             float("nan"), 0, "lasso", {})
    else:
        problem = RegressionProblem(lib.matrix, ones, mu1,
                                    normalize_columns=normalize)
        sol = lasso(problem)
    residual = lib.matrix @ sol.coefficients - ones

    if degenerate or np.max(np.abs(residual)) < 1e-12:
        if not degenerate:
            warnings.warn("model residuals are all below 1e-12; sources are "
                          "unidentifiable from this fit", RuntimeWarning)
        source = ()
        src_sweeps = 0
    else:
        source_kernel = KernelSpec("gaussian", ambient_dim=cloud.dim,
                                   shape=sigma2, squared_exponent=squared_exponent)
        bumps = kernel_matrix(source_kernel, cloud.nodes, cloud.nodes)
        src_sol = lasso(RegressionProblem(bumps, residual, mu2), tol=1e-6)
        order = np.argsort(-np.abs(src_sol.coefficients))
        source = tuple(
            {"node": int(i), "coefficient": float(src_sol.coefficients[i]),
             "center": [float(v) for v in cloud.nodes[i]]}
            for i in order if src_sol.coefficients[i] != 0.0)
        src_sweeps = src_sol.sweeps

    diag = {
        "method": "lasso",
        "sweeps": int(sol.sweeps),
        "kkt_residual": float(sol.kkt_residual),
        "residual_norm": float(np.linalg.norm(residual)),
        "source_sweeps": int(src_sweeps),
        "source_count": len(source),
        "degenerate": degenerate,
    }
    collapsed = sol.diagnostics.get("collapsed_columns", [])
    if collapsed:
        diag["collapsed_columns"] = [[lib.labels[kept], lib.labels[gone]]
                                     for kept, gone in collapsed]
    diag.update(_interp_diagnostics(ops, interp))
    diag["runtime"] = time.perf_counter() - t0
    diag["seed"] = cloud.seed
    return SparseModel("eikonal", kernel, lib.fmap, 1, lib.terms,
                       sol.coefficients,
                       {"method": "lasso", "mu1": mu1, "mu2": mu2,
                        "sigma2": sigma2, "squared_exponent": squared_exponent,
                        "normalize_columns": normalize},
                       diag, source=source)


# --- model files --------------------------------------------------------------

def _channel_to_dict(ch: Channel) -> dict:
    out = {"kind": ch.kind}
    if ch.component is not None:
        out["component"] = ch.component
    if ch.p is not None:
        out["p"] = ch.p
    return out


def write_model(model: SparseModel, path) -> None:
    """Serialize a model to JSON with full float precision."""
    payload = {
        "kind": model.kind,
        "kernel": {
            "family": model.kernel.family,
            "ambient_dim": model.kernel.ambient_dim,
            "smoothness_m": model.kernel.smoothness_m,
            "codim": model.kernel.codim,
            "shape": model.kernel.shape,
            "squared_exponent": model.kernel.squared_exponent,
        },
        "channels": [_channel_to_dict(c) for c in model.fmap.channels],
        "ell": model.ell,
        "n_library_terms": len(model.terms),
        "terms": [
            {"exponents": list(t.exponents), "label": t.label, "coefficient": float(c)}
            for t, c in zip(model.terms, model.coefficients) if c != 0.0],
        "regularization": model.regularization,
        "diagnostics": model.diagnostics,
        "dt": model.dt,
        "source": list(model.source) if model.source is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_model(path) -> SparseModel:
    """Rebuild a model from its JSON file."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed model file {path}: {exc}") from exc
    for key in ("kind", "kernel", "channels", "ell", "terms"):
        if key not in payload:
            raise ValueError(f"model file {path} is missing {key!r}")
    k = payload["kernel"]
    kernel = KernelSpec(k["family"], k["ambient_dim"], k.get("smoothness_m"),
                        k.get("codim", 1), k.get("shape", 1.0),
                        k.get("squared_exponent", True))
    channels = tuple(Channel(c["kind"], c.get("component"), c.get("p"))
                     for c in payload["channels"])
    fmap = FeatureMap(channels)
    kind = payload["kind"]
    if kind == "eikonal":
        terms = []
        for c, ch in enumerate(fmap.channels):
            exps = tuple(1 if i == c else 0 for i in range(fmap.dim))
            terms.append(FeatureTerm(exps, ch.label))
    else:
        terms = enumerate_terms(fmap, payload["ell"])
    coeff = np.zeros(len(terms))
    index = {t.exponents: i for i, t in enumerate(terms)}
    for entry in payload["terms"]:
        exps = tuple(entry["exponents"])
        if exps not in index:
            raise ValueError(f"model file term {entry['label']!r} is outside "
                             "the declared library")
        coeff[index[exps]] = entry["coefficient"]
    source = payload.get("source")
    return SparseModel(kind, kernel, fmap, payload["ell"], tuple(terms), coeff,
                       payload.get("regularization", {}),
                       payload.get("diagnostics", {}), payload.get("dt"),
                       tuple(source) if source is not None else None)
