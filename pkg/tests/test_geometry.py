"""Geometry checks: node generation, normals, level-function refinement, IO.

Oracles: closed-form lattices, parametric surface charts, finite-difference
gradients of the implicit functions, and exact sphere normals.
"""

import math

import numpy as np
import pytest

from surfpde.errors import (
    GenerationFailure,
    IllConditionedNeighborhood,
    NonConvergenceError,
    SingularGradientError,
)
from surfpde.geometry import (
    PointCloud,
    SURFACES,
    analytic_normals,
    bretzel2_surface,
    circle_nodes,
    cyclide_surface,
    implicit_surface_nodes,
    normal_extension,
    project_to_surface,
    read_nodes_csv,
    rough_normals,
    sphere_nodes,
    sphere_surface,
    torus_surface,
    write_nodes_csv,
)
from surfpde.kernels import KernelSpec


def fd_gradient(surface, x, h=1e-6):
    g = np.zeros_like(x)
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (surface.implicit(np.array([x + e]))[0]
                - surface.implicit(np.array([x - e]))[0]) / (2 * h)
    return g


# --- lattices ---------------------------------------------------------------

def test_circle_nodes_closed_form():
    cloud = circle_nodes(100)
    theta = 2 * np.pi * 15 / 100
    assert np.allclose(cloud.nodes[15], [np.cos(theta), np.sin(theta)], atol=1e-15)
    assert np.allclose(np.linalg.norm(cloud.nodes, axis=1), 1.0, atol=1e-14)
    assert np.allclose(cloud.normals, cloud.nodes, atol=1e-14)
    assert cloud.min_spacing == pytest.approx(2 * math.sin(math.pi / 100), rel=1e-12)


def test_circle_nodes_rejects_tiny_counts():
    with pytest.raises(ValueError):
        circle_nodes(2)


def test_sphere_nodes_quasi_uniform():
    for n in (200, 500, 1000):
        cloud = sphere_nodes(n)
        assert cloud.n_nodes == n
        assert np.allclose(np.linalg.norm(cloud.nodes, axis=1), 1.0, atol=1e-12)
        assert np.allclose(cloud.normals, cloud.nodes, atol=1e-12)
        assert cloud.min_spacing >= 0.8 * math.sqrt(4 * math.pi / n)


# --- implicit surfaces ------------------------------------------------------

def test_surface_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    for factory in SURFACES.values():
        surface = factory()
        lo = np.array([b[0] for b in surface.box])
        hi = np.array([b[1] for b in surface.box])
        for _ in range(10):
            x = rng.uniform(lo, hi)
            g = surface.gradient(np.array([x]))[0]
            assert np.allclose(g, fd_gradient(surface, x), rtol=1e-5, atol=1e-6)


def test_torus_implicit_vanishes_on_parametric_chart():
    surface = torus_surface()
    rng = np.random.default_rng(3)
    phi, psi = rng.uniform(0, 2 * np.pi, size=(2, 50))
    rho = 1.0 + np.cos(psi) / 3.0
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), np.sin(psi) / 3.0], axis=1)
    assert np.max(np.abs(surface.implicit(pts))) < 1e-12


def test_implicit_surface_nodes_land_on_surface():
    for name in ("torus", "cyclide", "bretzel2"):
        surface = SURFACES[name]()
        cloud = implicit_surface_nodes(surface, 300, seed=0)
        assert cloud.n_nodes == 300
        assert np.max(np.abs(surface.implicit(cloud.nodes))) <= 1e-10
        assert cloud.normals is None
        assert cloud.min_spacing > 0


def test_implicit_surface_nodes_deterministic_in_seed():
    surface = torus_surface()
    a = implicit_surface_nodes(surface, 120, seed=5)
    b = implicit_surface_nodes(surface, 120, seed=5)
    c = implicit_surface_nodes(surface, 120, seed=6)
    assert np.array_equal(a.nodes, b.nodes)
    assert not np.array_equal(a.nodes, c.nodes)


def test_farthest_point_thinning_keeps_separation():
    surface = torus_surface()
    cloud = implicit_surface_nodes(surface, 500, seed=1)
    # tube area is 4 pi^2 / 3; greedy maximin should stay near sqrt(A/N)
    assert cloud.min_spacing >= 0.4 * math.sqrt(4 * math.pi ** 2 / 3.0 / 500)


def test_projection_error_modes():
    surface = torus_surface()
    with pytest.raises(SingularGradientError):
        project_to_surface(surface, [[0.0, 0.0, 0.0]])   # grad F = 0 there
    with pytest.raises(NonConvergenceError):
        project_to_surface(sphere_surface(), [[5.0, 5.0, 5.0]], max_iter=1)


def test_generation_failure_when_pool_cannot_cover():
    # a pool of 2N points that mostly projects fine still cannot yield 3N nodes
    surface = torus_surface()
    with pytest.raises(ValueError):
        implicit_surface_nodes(surface, 100, seed=0, pool_multiplier=1)
    with pytest.raises(GenerationFailure):
        implicit_surface_nodes(surface, 100, seed=0, pool_multiplier=2, max_iter=1)


# --- normals ----------------------------------------------------------------

def test_analytic_normals_on_sphere_are_radial():
    cloud = sphere_nodes(150)
    refreshed = analytic_normals(sphere_surface(), PointCloud(cloud.nodes))
    assert np.allclose(refreshed.normals, cloud.nodes, atol=1e-12)


def test_analytic_normals_align_with_fd_gradient():
    surface = cyclide_surface()
    cloud = implicit_surface_nodes(surface, 80, seed=4)
    withn = analytic_normals(surface, cloud)
    for i in range(0, 80, 13):
        g = fd_gradient(surface, withn.nodes[i])
        g = g / np.linalg.norm(g)
        assert abs(np.dot(g, withn.normals[i])) > 1 - 1e-8


def test_rough_normals_match_exact_on_sphere():
    cloud = sphere_nodes(500)
    rough = rough_normals(PointCloud(cloud.nodes), k=12)
    dots = np.einsum("ij,ij->i", rough.normals, cloud.nodes)
    assert np.all(dots > 0.99)       # accurate and consistently outward


def test_rough_normals_consistent_on_torus():
    surface = torus_surface()
    cloud = implicit_surface_nodes(surface, 800, seed=7)
    exact = analytic_normals(surface, cloud)
    rough = rough_normals(cloud, k=12)
    dots = np.einsum("ij,ij->i", rough.normals, exact.normals)
    assert np.all(dots > 0.9)        # no sign flips anywhere, good alignment


def test_rough_normals_reject_degenerate_neighborhoods():
    t = np.linspace(0, 1, 40)
    line = np.stack([t, 2 * t, -t], axis=1)        # collinear points
    with pytest.raises(IllConditionedNeighborhood):
        rough_normals(PointCloud(line), k=6)


def test_normal_extension_refines_rough_normals():
    kernel = KernelSpec("matern_sobolev", ambient_dim=3, smoothness_m=4)
    cloud = sphere_nodes(200)
    rough = rough_normals(PointCloud(cloud.nodes), k=12)
    model, refined = normal_extension(rough, kernel)
    exact = cloud.nodes
    err_rough = np.linalg.norm(rough.normals - exact, axis=1).max()
    err_ref = np.linalg.norm(refined.normals - exact, axis=1).max()
    assert err_ref < err_rough       # refinement helps
    assert err_ref < 5e-3
    # the level function interpolates its construction data
    assert np.max(np.abs(model.value(cloud.nodes))) < 1e-7
    delta = model.offset
    assert np.allclose(model.value(cloud.nodes + delta * rough.normals), 1.0, atol=1e-7)
    assert np.allclose(model.value(cloud.nodes - delta * rough.normals), -1.0, atol=1e-7)


def test_normal_extension_requires_normals():
    kernel = KernelSpec("matern_sobolev", ambient_dim=3, smoothness_m=4)
    with pytest.raises(ValueError):
        normal_extension(PointCloud(sphere_nodes(50).nodes), kernel)


# --- point cloud invariants ---------------------------------------------------

def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.array([[np.nan, 0.0]]))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 2)), normals=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((1, 2)), normals=np.array([[0.0, 0.0]]))


def test_point_cloud_normalizes_normals():
    cloud = PointCloud(np.array([[1.0, 0.0]]), normals=np.array([[3.0, 4.0]]))
    assert np.allclose(cloud.normals[0], [0.6, 0.8], atol=1e-15)
    assert not cloud.nodes.flags.writeable


def test_tangent_projectors_kill_normals():
    rng = np.random.default_rng(9)
    nodes = rng.normal(size=(20, 3))
    normals = rng.normal(size=(20, 3))
    cloud = PointCloud(nodes, normals)
    P = cloud.tangent_projectors()
    for i in range(20):
        assert np.allclose(P[i] @ cloud.normals[i], 0.0, atol=1e-14)
        assert np.allclose(P[i], P[i].T, atol=1e-15)
        assert np.allclose(P[i] @ P[i], P[i], atol=1e-14)


# --- IO -----------------------------------------------------------------------

def test_nodes_csv_round_trip(tmp_path):
    surface = torus_surface()
    cloud = analytic_normals(surface, implicit_surface_nodes(surface, 60, seed=2))
    path = tmp_path / "nodes.csv"
    write_nodes_csv(cloud, path)
    back = read_nodes_csv(path)
    assert np.array_equal(back.nodes, cloud.nodes)
    assert np.array_equal(back.normals, cloud.normals)

    bare = PointCloud(cloud.nodes)
    write_nodes_csv(bare, path)
    back = read_nodes_csv(path)
    assert np.array_equal(back.nodes, cloud.nodes)
    assert back.normals is None


def test_nodes_csv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_nodes_csv(path)
    path.write_text("x0,x1\n1,2\n3\n")
    with pytest.raises(ValueError):
        read_nodes_csv(path)
