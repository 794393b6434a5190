"""Manufactured reference data for the benchmark problems.

Every dataset here is exact: sample values and forcings come from closed
forms or from symbolic surface calculus on the implicit description
(Laplace-Beltrami of u via  lap(u) - n^T Hess(u) n - div(n) (n . grad u)
with n = grad F / |grad F|), so discovery errors measure the method, not
the data.  Geodesic distance fields feed the source-localization
problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .discovery import Snapshots, add_noise
from .geometry import (
    PointCloud,
    analytic_normals,
    circle_nodes,
    implicit_surface_nodes,
    normal_extension,
    rough_normals,
    sphere_nodes,
    torus_surface,
)
from .kernels import KernelSpec


def circle_kernel(m: int = 6) -> KernelSpec:
    return KernelSpec("matern_sobolev", ambient_dim=2, smoothness_m=m)


def sphere_kernel(m: int = 4) -> KernelSpec:
    return KernelSpec("matern_sobolev", ambient_dim=3, smoothness_m=m)


@dataclass(frozen=True, eq=False)
class StationaryData:
    """One sampled field u with its forcing f and the true coefficients."""

    cloud: PointCloud
    samples: np.ndarray
    forcing: np.ndarray
    kernel: KernelSpec
    true_coefficients: dict = field(default_factory=dict)


# --- symbolic surface calculus -------------------------------------------------

@lru_cache(maxsize=None)
def _ex1_circle_callables():
    import sympy as sp

    th = sp.symbols("theta")
    u = sp.exp(sp.cos(th) + sp.sin(th)) * (sp.cos(th) ** 3 + sp.sin(th) ** 4 + 1)
    f = -sp.diff(u, th, 2) + u
    return (sp.lambdify(th, u, "numpy"), sp.lambdify(th, f, "numpy"))


@lru_cache(maxsize=None)
def _torus_sine_callables():
    """Spatial factor S = sin x sin y sin z and its surface Laplacian on the torus."""
    import sympy as sp

    x, y, z = sp.symbols("x y z")
    s2 = x ** 2 + y ** 2 + z ** 2
    F = (s2 + 1 - sp.Rational(1, 9)) ** 2 - 4 * (x ** 2 + y ** 2)
    S = sp.sin(x) * sp.sin(y) * sp.sin(z)

    g = [sp.diff(F, v) for v in (x, y, z)]
    gnorm = sp.sqrt(sum(gi ** 2 for gi in g))
    n = [gi / gnorm for gi in g]
    grad_u = [sp.diff(S, v) for v in (x, y, z)]
    hess = [[sp.diff(S, a, b) for b in (x, y, z)] for a in (x, y, z)]
    lap_amb = sum(hess[i][i] for i in range(3))
    nHn = sum(n[i] * hess[i][j] * n[j] for i in range(3) for j in range(3))
    div_n = sum(sp.diff(n[i], v) for i, v in enumerate((x, y, z)))
    ndotg = sum(n[i] * grad_u[i] for i in range(3))
    lap_surf = lap_amb - nHn - div_n * ndotg
    return (sp.lambdify((x, y, z), S, "numpy"),
            sp.lambdify((x, y, z), lap_surf, "numpy"))


# --- stationary reaction-diffusion (second order) --------------------------------

def ex1_circle_data(n_nodes: int = 30, noise: float = 0.0,
                    seed: int = 0) -> StationaryData:
    """u - lap(u) = f on the circle with an oscillatory exponential field."""
    cloud = circle_nodes(n_nodes)
    theta = np.arctan2(cloud.nodes[:, 1], cloud.nodes[:, 0])
    u_fn, f_fn = _ex1_circle_callables()
    samples = add_noise(u_fn(theta), noise, seed)
    return StationaryData(cloud, samples, f_fn(theta), circle_kernel(),
                          {"lap(u)": -1.0, "u": 1.0})


def _ex1_sphere_fields(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y, z = nodes.T
    u = 10 * x * y * z + 5 * x * y + z
    # degree-l spherical harmonics scale by -l(l+1) under the Laplacian
    lap = -120 * x * y * z - 30 * x * y - 2 * z
    return u, u - lap


def ex1_sphere_data(n_nodes: int = 1000, noise: float = 0.0, seed: int = 0,
                    normals: str = "analytic") -> StationaryData:
    """u - lap(u) = f on the sphere with a low-degree harmonic combination.

    ``normals`` picks the normal pipeline: "analytic" (exact radial) or
    "extension" (local PCA refined through the interpolated level
    function).
    """
    cloud = sphere_nodes(n_nodes)
    kernel = sphere_kernel()
    if normals == "extension":
        rough = rough_normals(PointCloud(cloud.nodes), k=12)
        _, cloud = normal_extension(rough, kernel)
    elif normals != "analytic":
        raise ValueError("normals must be 'analytic' or 'extension'")
    u, f = _ex1_sphere_fields(cloud.nodes)
    return StationaryData(cloud, add_noise(u, noise, seed), f, kernel,
                          {"lap(u)": -1.0, "u": 1.0})


# --- evolution (semi-linear heat flows) --------------------------------------------

def ex2_sphere_snapshots(n_nodes: int = 500, dt: float = 0.01,
                         n_steps: int = 100) -> tuple[Snapshots, dict]:
    """du/dt = 0.5 lap(u) + 0.125 u^2 - f with u = e^{x+y+z} e^{-t}."""
    cloud = sphere_nodes(n_nodes)
    s = cloud.nodes.sum(axis=1)
    base = np.exp(s)
    times = dt * np.arange(n_steps + 1)
    decay = np.exp(-times)[:, None]
    values = decay * base
    lap = values * (3.0 - 2.0 * s - s * s)     # surface Laplacian of e^s e^{-t}
    dudt = -values
    forcing = 0.5 * lap + 0.125 * values ** 2 - dudt
    snaps = Snapshots(cloud, times, values, forcing)
    return snaps, {"true_coefficients": {"lap(u)": 0.5, "u^2": 0.125},
                   "kernel": sphere_kernel()}


def ex2_torus_snapshots(n_nodes: int = 3968, dt: float = 0.01,
                        n_steps: int = 100, seed: int = 0) -> tuple[Snapshots, dict]:
    """du/dt = lap(u) + u^2 - f with u = sin x sin y sin z sin t on the torus."""
    surface = torus_surface()
    cloud = analytic_normals(surface, implicit_surface_nodes(surface, n_nodes, seed))
    S_fn, lapS_fn = _torus_sine_callables()
    x, y, z = cloud.nodes.T
    S = np.asarray(S_fn(x, y, z), dtype=float)
    lapS = np.asarray(lapS_fn(x, y, z), dtype=float)
    times = dt * np.arange(n_steps + 1)
    sin_t = np.sin(times)[:, None]
    cos_t = np.cos(times)[:, None]
    values = sin_t * S
    lap = sin_t * lapS
    dudt = cos_t * S
    forcing = lap + values ** 2 - dudt
    snaps = Snapshots(cloud, times, values, forcing)
    return snaps, {"true_coefficients": {"lap(u)": 1.0, "u^2": 1.0},
                   "kernel": sphere_kernel()}


# --- geodesic distance fields (first order / source localization) -------------------

def circle_arc_distance(theta: np.ndarray, theta_source: float) -> np.ndarray:
    gap = np.abs(np.mod(theta - theta_source + np.pi, 2 * np.pi) - np.pi)
    return gap


# Wide source bumps rank the true source above the antipodal cut-locus kink;
# narrow bumps chase interpolation ringing ~12 nodes off the kinks instead.
EIKONAL_REGRESSION = {"mu1": 5e-4, "mu2": 2.0, "sigma2": 5.0}


def ex3_circle_data(n_nodes: int = 100, source_index: int = 19) -> StationaryData:
    """Arc distance to one node of the circle lattice."""
    cloud = circle_nodes(n_nodes)
    theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
    samples = circle_arc_distance(theta, theta[source_index])
    return StationaryData(cloud, samples, np.ones(n_nodes), circle_kernel(),
                          {"source_index": source_index})


def ex3_sphere_data(n_nodes: int = 1000) -> StationaryData:
    """Great-circle distance to the lattice node nearest the north pole."""
    cloud = sphere_nodes(n_nodes)
    source_index = int(np.argmax(cloud.nodes[:, 2]))
    dots = np.clip(cloud.nodes @ cloud.nodes[source_index], -1.0, 1.0)
    samples = np.arccos(dots)
    return StationaryData(cloud, samples, np.ones(n_nodes), sphere_kernel(),
                          {"source_index": source_index})


def ex3_torus_data(n_nodes: int = 1500, seed: int = 0) -> StationaryData:
    """Tube distance to the two circles {z = 0} of the torus."""
    surface = torus_surface()
    cloud = analytic_normals(surface, implicit_surface_nodes(surface, n_nodes, seed))
    x, y, z = cloud.nodes.T
    psi = np.arctan2(z, np.sqrt(x * x + y * y) - 1.0)
    samples = np.minimum(np.abs(psi), np.pi - np.abs(psi)) / 3.0
    return StationaryData(cloud, samples, np.ones(n_nodes), sphere_kernel(),
                          {"source_index": None})


def eikonal_p_values() -> list[float]:
    """Default exponent ladder: 2, 5, 50, then hundreds up to 1000."""
    return [2.0, 5.0, 50.0] + [float(p) for p in range(100, 1001, 100)]


# --- fourth order ---------------------------------------------------------------

def ex4_sphere_data(n_nodes: int = 100) -> StationaryData:
    """0.25 bih(u) = f with u = z, so f = z exactly."""
    cloud = sphere_nodes(n_nodes)
    z = cloud.nodes[:, 2]
    return StationaryData(cloud, z.copy(), z.copy(), sphere_kernel(),
                          {"bih(u)": 0.25})
