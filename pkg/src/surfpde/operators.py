"""Discrete surface differential operators from kernel interpolation.

Everything is built once per node set: with Psi the kernel restricted to
the nodes X = {x_1..x_N} and P_i = I - n_i n_i^T the tangent projector at
node i,

    gram[i, j]  = Psi(x_i, x_j)
    B_k[i, j]   = k-th component of P_i grad_x Psi(x, x_j) at x = x_i
    D_k         = B_k gram^{-1}
    L           = sum_k D_k D_k

D_k maps nodal values of a function to nodal values of the k-th component
of its surface gradient (of the kernel interpolant); L is the resulting
Laplace-Beltrami approximation.  Higher-order operators are compositions
of these matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteResult
from .geometry import PointCloud
from .kernels import KernelSpec, kernel_gradient_matrices, kernel_matrix
from .linalg import SPDFactor, factor_spd


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """Nodal differentiation matrices tied to one node set and kernel."""

    cloud: PointCloud
    kernel: KernelSpec
    gram: np.ndarray          # (N, N)
    factor: SPDFactor
    D: np.ndarray             # (d, N, N) surface-gradient components
    L: np.ndarray             # (N, N) Laplace-Beltrami

    @property
    def n_nodes(self) -> int:
        return self.cloud.n_nodes

    @property
    def dim(self) -> int:
        return self.cloud.dim

    @property
    def jitter(self) -> float:
        return self.factor.jitter


@dataclass(frozen=True, eq=False)
class Interpolant:
    """Kernel interpolant of nodal samples, with solve diagnostics."""

    nodes: np.ndarray
    kernel: KernelSpec
    coefficients: np.ndarray
    samples: np.ndarray
    residual: float           # relative nodal residual after solving
    ill_conditioned: bool


def build_operators(cloud: PointCloud, kernel: KernelSpec) -> DiscreteOperators:
    """Assemble gram, gradient, and Laplace-Beltrami matrices for a cloud."""
    if cloud.normals is None:
        raise ValueError("operators need a cloud with unit normals")
    if kernel.family != "matern_sobolev":
        raise ValueError("discrete operators require the matern_sobolev family")
    if kernel.ambient_dim != cloud.dim:
        raise ValueError("kernel ambient dimension does not match the cloud")
    X, normals = cloud.nodes, cloud.normals
    d = cloud.dim

    # gradient matrices become tangential after removing the normal part
    G = kernel_gradient_matrices(kernel, X, X)
    W = np.einsum("ia,aij->ij", normals, G)
    for k in range(d):
        G[k] -= normals[:, k, None] * W
    del W

    gram = kernel_matrix(kernel, X, X)
    factor = factor_spd(gram)
    D = np.empty_like(G)
    for k in range(d):
        D[k] = factor.solve(G[k].T).T
    del G
    L = np.zeros_like(gram)
    for k in range(d):
        L += D[k] @ D[k]
    if not np.all(np.isfinite(L)):
        raise NonFiniteResult("Laplace-Beltrami matrix contains non-finite entries")
    return DiscreteOperators(cloud, kernel, gram, factor, D, L)


def interpolate(ops: DiscreteOperators, samples) -> Interpolant:
    """Solve for kernel coefficients interpolating nodal samples.

    One step of iterative refinement is applied if the relative nodal
    residual exceeds 1e-8; if it still does, the interpolant is flagged
    ill-conditioned rather than rejected.
    """
    b = np.asarray(samples, dtype=float)
    if b.shape != (ops.n_nodes,):
        raise ValueError(f"samples must have shape ({ops.n_nodes},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("samples must be finite")
    scale = np.linalg.norm(b)
    coeffs = ops.factor.solve(b)
    resid = np.linalg.norm(ops.gram @ coeffs - b)
    rel = resid / scale if scale > 0 else 0.0
    if rel > 1e-8:
        coeffs = coeffs + ops.factor.solve(b - ops.gram @ coeffs)
        resid = np.linalg.norm(ops.gram @ coeffs - b)
        rel = resid / scale if scale > 0 else 0.0
    return Interpolant(ops.cloud.nodes, ops.kernel, coeffs, b, float(rel),
                       bool(rel > 1e-8))


def evaluate(interp: Interpolant, points) -> np.ndarray:
    """Evaluate the interpolant at arbitrary ambient points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return kernel_matrix(interp.kernel, points, interp.nodes) @ interp.coefficients


def _nodal(ops: DiscreteOperators, values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (ops.n_nodes,):
        raise ValueError(f"nodal values must have shape ({ops.n_nodes},)")
    return v


def surface_gradient_nodal(ops: DiscreteOperators, values) -> np.ndarray:
    """Surface-gradient components at the nodes, shape (d, N)."""
    v = _nodal(ops, values)
    return np.einsum("kij,j->ki", ops.D, v)


def laplace_beltrami_nodal(ops: DiscreteOperators, values) -> np.ndarray:
    """Laplace-Beltrami values at the nodes."""
    return ops.L @ _nodal(ops, values)


def biharmonic_nodal(ops: DiscreteOperators, values) -> np.ndarray:
    """Squared Laplace-Beltrami (biharmonic operator) at the nodes."""
    return ops.L @ (ops.L @ _nodal(ops, values))


def grad_of_laplacian_nodal(ops: DiscreteOperators, values) -> np.ndarray:
    """Surface gradient of the Laplace-Beltrami, shape (d, N)."""
    lap = ops.L @ _nodal(ops, values)
    return np.einsum("kij,j->ki", ops.D, lap)


def p_laplacian_nodal(ops: DiscreteOperators, values, p: float) -> np.ndarray:
    """p-Laplacian  sum_k D_k (|grad u|^(p-2) [grad u]_k)  at the nodes.

    The weight is computed in log space so large p stays usable as long
    as the result itself fits in double precision; p = 2 short-circuits
    to the plain Laplacian weight.
    """
    if not np.isfinite(p) or p < 2:
        raise ValueError(f"p-Laplacian needs p >= 2, got {p}")
    v = _nodal(ops, values)
    if p == 2:
        return ops.L @ v        # unit weight: exactly the Laplacian
    g = np.einsum("kij,j->ki", ops.D, v)
    q2 = np.einsum("ki,ki->i", g, g)
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(q2 > 0.0, np.exp(0.5 * (p - 2.0) * np.log(q2)), 0.0)
    if not np.all(np.isfinite(w)):
        raise NonFiniteResult(
            f"|grad u|^(p-2) overflowed for p={p}; rescale the samples")
    out = np.zeros(ops.n_nodes)
    for k in range(ops.dim):
        out += ops.D[k] @ (w * g[k])
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult(f"p-Laplacian output non-finite for p={p}")
    return out
