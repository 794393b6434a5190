"""Closed surfaces, scattered node sets, and normal estimation.

Surfaces are described implicitly as the zero set of F: R^d -> R.  Node
sets are plain coordinate arrays with optional unit outward normals.
Normals come from three routes of increasing generality: exact gradients
of F, local principal-component fits oriented by graph propagation, and a
kernel-interpolated level function fitted to signed offsets of the rough
normals ("normal extension").
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    GenerationFailure,
    IllConditionedNeighborhood,
    NonConvergenceError,
    SingularGradientError,
)
from .kernels import KernelSpec, kernel_gradient_matrices, kernel_matrix
from .linalg import factor_spd


@dataclass(frozen=True, eq=False)
class Surface:
    """Implicitly defined closed surface {x : F(x) = 0} in R^d.

    ``implicit`` and ``gradient`` are vectorized over point arrays of
    shape (M, d).  ``box`` bounds the surface for candidate sampling.
    """

    name: str
    ambient_dim: int
    implicit: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    box: tuple[tuple[float, float], ...]

    @property
    def intrinsic_dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def codim(self) -> int:
        return 1


def circle_surface() -> Surface:
    return Surface(
        "circle", 2,
        lambda P: P[:, 0] ** 2 + P[:, 1] ** 2 - 1.0,
        lambda P: 2.0 * P,
        ((-1.2, 1.2), (-1.2, 1.2)))


def sphere_surface() -> Surface:
    return Surface(
        "sphere", 3,
        lambda P: np.einsum("ij,ij->i", P, P) - 1.0,
        lambda P: 2.0 * P,
        ((-1.2, 1.2),) * 3)


def torus_surface() -> Surface:
    """Torus of major radius 1, minor radius 1/3 around the z axis."""

    def implicit(P):
        x, y, z = P.T
        s = x * x + y * y + z * z
        return (s + 1.0 - 1.0 / 9.0) ** 2 - 4.0 * (x * x + y * y)

    def gradient(P):
        x, y, z = P.T
        a = x * x + y * y + z * z + 1.0 - 1.0 / 9.0
        return np.stack([4.0 * x * (a - 2.0), 4.0 * y * (a - 2.0), 4.0 * z * a], axis=1)

    return Surface("torus", 3, implicit, gradient,
                   ((-1.4, 1.4), (-1.4, 1.4), (-0.45, 0.45)))


def cyclide_surface() -> Surface:
    """Ring cyclide with parameters a=2, b=1.9, shift sqrt(4 - 1.9^2)."""
    b2 = 1.9 ** 2
    c = np.sqrt(4.0 - b2)

    def implicit(P):
        x, y, z = P.T
        s = x * x + y * y + z * z
        return (s - 1.0 + b2) ** 2 - 4.0 * (2.0 * x + c) ** 2 - 4.0 * b2 * y * y

    def gradient(P):
        x, y, z = P.T
        a = x * x + y * y + z * z - 1.0 + b2
        gx = 4.0 * x * a - 16.0 * (2.0 * x + c)
        gy = 4.0 * y * a - 8.0 * b2 * y
        gz = 4.0 * z * a
        return np.stack([gx, gy, gz], axis=1)

    return Surface("cyclide", 3, implicit, gradient,
                   ((-2.6, 3.9), (-3.2, 3.2), (-1.8, 1.8)))


def bretzel2_surface() -> Surface:
    """Genus-2 pretzel-like closed surface."""

    def implicit(P):
        x, y, z = P.T
        q = x * x * (1.0 - x * x) - y * y
        return q * q + 0.5 * z * z - (x * x + y * y + z * z) / 40.0 - 1.0 / 40.0

    def gradient(P):
        x, y, z = P.T
        q = x * x * (1.0 - x * x) - y * y
        gx = 2.0 * q * (2.0 * x - 4.0 * x ** 3) - x / 20.0
        gy = -4.0 * q * y - y / 20.0
        gz = z - z / 20.0
        return np.stack([gx, gy, gz], axis=1)

    return Surface("bretzel2", 3, implicit, gradient,
                   ((-1.2, 1.2), (-0.85, 0.85), (-0.45, 0.45)))


SURFACES: dict[str, Callable[[], Surface]] = {
    "circle": circle_surface,
    "sphere": sphere_surface,
    "torus": torus_surface,
    "cyclide": cyclide_surface,
    "bretzel2": bretzel2_surface,
}


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Scattered nodes on a surface, with optional unit outward normals."""

    nodes: np.ndarray
    normals: np.ndarray | None = None
    surface_name: str = ""
    seed: int | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[0] < 1:
            raise ValueError("nodes must be a non-empty (N, d) array")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("nodes must be finite")
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        if self.normals is not None:
            normals = np.array(self.normals, dtype=float)
            if normals.shape != nodes.shape:
                raise ValueError("normals must match nodes in shape")
            if not np.all(np.isfinite(normals)):
                raise ValueError("normals must be finite")
            norms = np.linalg.norm(normals, axis=1)
            if np.any(norms < 1e-12):
                raise ValueError("normals must be nonzero")
            normals = normals / norms[:, None]
            normals.flags.writeable = False
            object.__setattr__(self, "normals", normals)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @cached_property
    def min_spacing(self) -> float:
        """Smallest pairwise node distance."""
        d, _ = cKDTree(self.nodes).query(self.nodes, k=2)
        return float(d[:, 1].min())

    def tangent_projectors(self) -> np.ndarray:
        """Per-node tangent-plane projectors P_i = I - n_i n_i^T, shape (N, d, d)."""
        if self.normals is None:
            raise ValueError("point cloud carries no normals")
        eye = np.eye(self.dim)
        return eye[None, :, :] - np.einsum("ik,il->ikl", self.normals, self.normals)

    def with_normals(self, normals: np.ndarray) -> "PointCloud":
        return PointCloud(self.nodes, normals, self.surface_name, self.seed)


def circle_nodes(n_nodes: int) -> PointCloud:
    """Equispaced nodes on the unit circle; normals point radially out."""
    if n_nodes < 3:
        raise ValueError("need at least 3 nodes on the circle")
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return PointCloud(nodes, nodes.copy(), "circle")


def sphere_nodes(n_nodes: int) -> PointCloud:
    """Fibonacci-lattice nodes on the unit sphere; normals point radially out.

    The lattice is quasi-uniform: its smallest pairwise distance stays above
    0.8 * sqrt(4 pi / N).
    """
    if n_nodes < 4:
        raise ValueError("need at least 4 nodes on the sphere")
    i = np.arange(n_nodes)
    z = 1.0 - (2.0 * i + 1.0) / n_nodes
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    nodes = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    cloud = PointCloud(nodes, nodes.copy(), "sphere")
    floor = 0.8 * np.sqrt(4.0 * np.pi / n_nodes)
    if cloud.min_spacing < floor:
        raise GenerationFailure(
            f"sphere lattice separation {cloud.min_spacing:.3e} fell below {floor:.3e}")
    return cloud


def _newton_project(surface: Surface, points: np.ndarray, max_iter: int,
                    tol: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Drive points toward {F = 0} with x <- x - F grad F / |grad F|^2.

    Returns (points, converged_mask, singular_mask).
    """
    x = np.array(points, dtype=float)
    singular = np.zeros(len(x), dtype=bool)
    active = np.ones(len(x), dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f = surface.implicit(x[idx])
        done = np.abs(f) <= tol
        active[idx[done]] = False
        idx = idx[~done]
        if idx.size == 0:
            break
        f = f[~done]
        g = surface.gradient(x[idx])
        gn2 = np.einsum("ij,ij->i", g, g)
        bad = gn2 < 1e-26
        if np.any(bad):
            singular[idx[bad]] = True
            active[idx[bad]] = False
            keep = ~bad
            idx, f, g, gn2 = idx[keep], f[keep], g[keep], gn2[keep]
        x[idx] -= (f / gn2)[:, None] * g
    converged = ~active & ~singular
    return x, converged, singular


def project_to_surface(surface: Surface, points: np.ndarray, max_iter: int = 100,
                       tol: float = 1e-10) -> np.ndarray:
    """Project points onto the zero level set along the implicit gradient."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != surface.ambient_dim:
        raise ValueError("points have the wrong ambient dimension")
    x, converged, singular = _newton_project(surface, points, max_iter, tol)
    if np.any(singular):
        raise SingularGradientError(
            f"gradient of {surface.name} vanished at {int(singular.sum())} point(s)")
    if not np.all(converged):
        raise NonConvergenceError(
            f"{int((~converged).sum())} point(s) did not reach |F| <= {tol} "
            f"in {max_iter} iterations")
    return x


def _farthest_point_subset(points: np.ndarray, n: int) -> np.ndarray:
    """Greedy maximin subset of size n, starting from the first point."""
    sel = np.empty(n, dtype=int)
    sel[0] = 0
    dist = np.linalg.norm(points - points[0], axis=1)
    for t in range(1, n):
        sel[t] = int(np.argmax(dist))
        np.minimum(dist, np.linalg.norm(points - points[sel[t]], axis=1), out=dist)
    return sel


def implicit_surface_nodes(surface: Surface, n_nodes: int, seed: int,
                           pool_multiplier: int = 8, max_iter: int = 100,
                           tol: float = 1e-10) -> PointCloud:
    """Quasi-uniform nodes on an implicit surface, without normals.

    Draws a seeded uniform pool in the bounding box, pushes it onto the
    surface along the implicit gradient, drops points that fail to land,
    and thins the rest by greedy farthest-point selection.
    """
    if n_nodes < 4:
        raise ValueError("need at least 4 nodes")
    if pool_multiplier < 2:
        raise ValueError("pool_multiplier must be at least 2")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in surface.box])
    hi = np.array([b[1] for b in surface.box])
    pool = rng.uniform(lo, hi, size=(pool_multiplier * n_nodes, surface.ambient_dim))
    x, converged, _ = _newton_project(surface, pool, max_iter, tol)
    landed = x[converged]
    if len(landed) < n_nodes:
        raise GenerationFailure(
            f"only {len(landed)} of {len(pool)} candidates reached {surface.name}; "
            f"need {n_nodes}. Increase pool_multiplier.")
    keep = _farthest_point_subset(landed, n_nodes)
    return PointCloud(landed[keep], None, surface.name, seed)


def analytic_normals(surface: Surface, cloud: PointCloud) -> PointCloud:
    """Attach exact outward normals grad F / |grad F| to the nodes."""
    g = surface.gradient(cloud.nodes)
    norms = np.linalg.norm(g, axis=1)
    if np.any(norms < 1e-13):
        raise SingularGradientError(
            f"gradient of {surface.name} vanished at a node")
    return cloud.with_normals(g / norms[:, None])


def _knn_indices(nodes: np.ndarray, k: int) -> np.ndarray:
    _, idx = cKDTree(nodes).query(nodes, k=k + 1)
    return idx[:, 1:]            # drop the point itself


def rough_normals(cloud: PointCloud, k: int = 12) -> PointCloud:
    """Estimate consistently oriented outward normals from local PCA.

    Each node's normal is the least-variance principal direction of its k
    nearest neighbors.  Signs are made consistent by breadth-first
    propagation over the neighbor graph, then each connected component is
    flipped, if needed, to point away from its own centroid on average.
    """
    nodes = cloud.nodes
    n, d = nodes.shape
    if k < d or k >= n:
        raise ValueError(f"need d <= k < N neighbors, got k={k}, N={n}, d={d}")
    nbr = _knn_indices(nodes, k)
    normals = np.empty_like(nodes)
    for i in range(n):
        local = nodes[nbr[i]] - nodes[nbr[i]].mean(axis=0)
        w, v = np.linalg.eigh(local.T @ local)
        w = np.clip(w, 0.0, None)
        # the tangent plane must dominate the normal direction clearly
        if w[1] < max(4.0 * w[0], 1e-8 * w[-1]):
            raise IllConditionedNeighborhood(
                f"PCA neighborhood of node {i} is degenerate "
                f"(variances {w[0]:.3e} vs {w[1]:.3e}); increase k or node count")
        normals[i] = v[:, 0]

    # symmetric adjacency for orientation propagation
    adj: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in nbr[i]:
            adj[i].add(int(j))
            adj[int(j)].add(i)

    visited = np.zeros(n, dtype=bool)
    for seed_node in range(n):
        if visited[seed_node]:
            continue
        comp = [seed_node]
        visited[seed_node] = True
        queue = deque([seed_node])
        while queue:
            i = queue.popleft()
            for j in adj[i]:
                if not visited[j]:
                    if np.dot(normals[i], normals[j]) < 0:
                        normals[j] = -normals[j]
                    visited[j] = True
                    comp.append(j)
                    queue.append(j)
        comp = np.array(comp)
        centroid = nodes[comp].mean(axis=0)
        outwardness = np.einsum("ij,ij->", normals[comp], nodes[comp] - centroid)
        if outwardness < 0:
            normals[comp] = -normals[comp]
    return cloud.with_normals(normals)


@dataclass(frozen=True, eq=False)
class LevelSetModel:
    """Kernel interpolant s(x) of a signed level function near the surface.

    s vanishes at the nodes, is +1 at outward offsets and -1 at inward
    offsets, so grad s approximates the outward normal direction.
    """

    centers: np.ndarray
    coefficients: np.ndarray
    kernel: KernelSpec
    offset: float

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return kernel_matrix(self.kernel, points, self.centers) @ self.coefficients

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        g = kernel_gradient_matrices(self.kernel, points, self.centers)
        return np.einsum("kmj,j->mk", g, self.coefficients)


def normal_extension(cloud: PointCloud, kernel: KernelSpec,
                     delta: float | None = None) -> tuple[LevelSetModel, PointCloud]:
    """Refine approximate normals through a kernel-interpolated level function.

    Interpolates s = 0 at the nodes and s = +/-1 at nodes offset by
    +/- delta along the current (rough) normals, then replaces each normal
    by the normalized gradient of s, sign-matched to the rough one.
    Returns the fitted level model and the refreshed cloud.
    """
    if cloud.normals is None:
        raise ValueError("normal_extension needs a cloud with (rough) normals")
    if delta is None:
        delta = 0.5 * cloud.min_spacing
    if delta <= 0:
        raise ValueError("offset delta must be positive")
    X, nrm = cloud.nodes, cloud.normals
    centers = np.concatenate([X, X + delta * nrm, X - delta * nrm], axis=0)
    values = np.concatenate([
        np.zeros(len(X)), np.ones(len(X)), -np.ones(len(X))])
    gram = kernel_matrix(kernel, centers, centers)
    coeffs = factor_spd(gram).solve(values)
    model = LevelSetModel(centers, coeffs, kernel, float(delta))
    grads = model.gradient(X)
    norms = np.linalg.norm(grads, axis=1)
    if np.any(norms < 1e-13):
        raise SingularGradientError("level-function gradient vanished at a node")
    refined = grads / norms[:, None]
    flip = np.einsum("ij,ij->i", refined, nrm) < 0
    refined[flip] = -refined[flip]
    return model, cloud.with_normals(refined)


# --- delimited node IO ------------------------------------------------------

def write_nodes_csv(cloud: PointCloud, path) -> None:
    """Write nodes (and normals if present) with full float64 precision."""
    d = cloud.dim
    cols = [f"x{k}" for k in range(d)]
    data = cloud.nodes
    if cloud.normals is not None:
        cols += [f"n{k}" for k in range(d)]
        data = np.concatenate([cloud.nodes, cloud.normals], axis=1)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_nodes_csv(path) -> PointCloud:
    """Read a node file written by write_nodes_csv."""
    with open(path) as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        d = sum(1 for c in cols if c.startswith("x"))
        has_normals = any(c.startswith("n") for c in cols)
        expected = [f"x{k}" for k in range(d)]
        if has_normals:
            expected += [f"n{k}" for k in range(d)]
        if cols != expected:
            raise ValueError(f"unrecognized node file columns: {header!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except Exception as exc:
            raise ValueError(f"malformed node file {path}: {exc}") from exc
    if data.shape[1] != len(cols):
        raise ValueError("node file rows do not match the header")
    nodes = data[:, :d]
    normals = data[:, d:] if has_normals else None
    return PointCloud(nodes, normals)
