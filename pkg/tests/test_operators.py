"""Discrete operator checks against closed-form surface calculus.

Oracles: spherical harmonics (restrictions of homogeneous harmonic
polynomials, eigenfunctions of the sphere Laplacian with eigenvalue
-l(l+1)), trigonometric eigenfunctions on the circle, and a closed-form
circle p-Laplacian.
"""

import numpy as np
import pytest

from surfpde.errors import NonFiniteResult
from surfpde.geometry import PointCloud, circle_nodes, sphere_nodes
from surfpde.kernels import KernelSpec
from surfpde.operators import (
    biharmonic_nodal,
    build_operators,
    evaluate,
    grad_of_laplacian_nodal,
    interpolate,
    laplace_beltrami_nodal,
    p_laplacian_nodal,
    surface_gradient_nodal,
)

SPHERE_KERNEL = KernelSpec("matern_sobolev", ambient_dim=3, smoothness_m=4)
CIRCLE_KERNEL = KernelSpec("matern_sobolev", ambient_dim=2, smoothness_m=6)


def rel_l2(a, b):
    return np.linalg.norm(np.ravel(a) - np.ravel(b)) / np.linalg.norm(np.ravel(b))


@pytest.fixture(scope="module")
def sphere500():
    cloud = sphere_nodes(500)
    return cloud, build_operators(cloud, SPHERE_KERNEL)


@pytest.fixture(scope="module")
def circle30():
    cloud = circle_nodes(30)
    return cloud, build_operators(cloud, CIRCLE_KERNEL)


# --- sphere -----------------------------------------------------------------

def test_sphere_gradient_of_height(sphere500):
    cloud, ops = sphere500
    x, y, z = cloud.nodes.T
    g = surface_gradient_nodal(ops, z)
    exact = np.stack([-z * x, -z * y, 1 - z * z])
    assert rel_l2(g, exact) < 1e-7


def test_sphere_laplacian_eigenfunctions(sphere500):
    cloud, ops = sphere500
    x, y, z = cloud.nodes.T
    assert rel_l2(laplace_beltrami_nodal(ops, z), -2 * z) < 1e-6
    assert rel_l2(laplace_beltrami_nodal(ops, x * y), -6 * x * y) < 1e-6
    assert rel_l2(laplace_beltrami_nodal(ops, x * y * z), -12 * x * y * z) < 1e-5


def test_sphere_biharmonic_eigenfunction(sphere500):
    cloud, ops = sphere500
    z = cloud.nodes[:, 2]
    assert rel_l2(biharmonic_nodal(ops, z), 4 * z) < 1e-5


def test_sphere_laplacian_error_decreases_with_n():
    errs = []
    for n in (200, 500):
        cloud = sphere_nodes(n)
        ops = build_operators(cloud, SPHERE_KERNEL)
        z = cloud.nodes[:, 2]
        errs.append(rel_l2(laplace_beltrami_nodal(ops, z), -2 * z))
    assert errs[1] < errs[0]


# --- circle -----------------------------------------------------------------

def test_circle_calculus_on_trig_mode(circle30):
    cloud, ops = circle30
    th = np.arctan2(cloud.nodes[:, 1], cloud.nodes[:, 0])
    u = np.cos(3 * th)
    tangent = np.stack([-np.sin(th), np.cos(th)])
    assert rel_l2(laplace_beltrami_nodal(ops, u), -9 * u) < 1e-9
    assert rel_l2(surface_gradient_nodal(ops, u), -3 * np.sin(3 * th) * tangent) < 1e-9
    assert rel_l2(biharmonic_nodal(ops, u), 81 * u) < 1e-8
    assert rel_l2(grad_of_laplacian_nodal(ops, u),
                  27 * np.sin(3 * th) * tangent) < 1e-8


def test_circle_p_laplacian_closed_form(circle30):
    cloud, ops = circle30
    th = np.arctan2(cloud.nodes[:, 1], cloud.nodes[:, 0])
    # on the circle, Delta_p u = d/ds(|u'|^(p-2) u'); for u = sin with p = 4
    # the flux is cos^3 and the result is -3 cos^2 sin
    u = np.sin(th)
    out = p_laplacian_nodal(ops, u, 4.0)
    assert rel_l2(out, -3 * np.cos(th) ** 2 * np.sin(th)) < 1e-8


def test_p_laplacian_p2_equals_laplacian(circle30):
    _, ops = circle30
    rng = np.random.default_rng(0)
    u = rng.normal(size=ops.n_nodes)
    assert np.array_equal(p_laplacian_nodal(ops, u, 2.0),
                          laplace_beltrami_nodal(ops, u))


def test_p_laplacian_huge_p_on_distance_like_field():
    cloud = circle_nodes(100)
    ops = build_operators(cloud, CIRCLE_KERNEL)
    th = 2 * np.pi * np.arange(100) / 100
    dist = np.minimum(th, 2 * np.pi - th)     # arc distance from node 0
    out = p_laplacian_nodal(ops, dist, 1000.0)
    assert np.all(np.isfinite(out))


def test_p_laplacian_overflow_raises(circle30):
    cloud, ops = circle30
    th = np.arctan2(cloud.nodes[:, 1], cloud.nodes[:, 0])
    with pytest.raises(NonFiniteResult):
        p_laplacian_nodal(ops, 10.0 * np.sin(th), 1000.0)


# --- interpolation ------------------------------------------------------------

def test_interpolation_reproduces_smooth_samples(sphere500):
    cloud, ops = sphere500
    x, y, z = cloud.nodes.T
    for samples in (z, x * y, np.exp(x + y + z)):
        interp = interpolate(ops, samples)
        assert interp.residual <= 1e-8
        assert not interp.ill_conditioned
        at_nodes = evaluate(interp, ops.cloud.nodes)
        assert rel_l2(at_nodes, samples) < 1e-7


def test_interpolation_exact_or_flagged_on_rough_samples(sphere500):
    _, ops = sphere500
    rng = np.random.default_rng(1)
    for _ in range(5):
        samples = rng.normal(size=ops.n_nodes)
        interp = interpolate(ops, samples)
        assert interp.residual <= 1e-8 or interp.ill_conditioned


def test_interpolant_evaluates_accurately_off_nodes(sphere500):
    cloud, ops = sphere500
    interp = interpolate(ops, cloud.nodes[:, 2])
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(40, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    vals = evaluate(interp, pts)
    assert np.max(np.abs(vals - pts[:, 2])) < 1e-6


def test_near_duplicate_nodes_are_flagged_or_resolved():
    base = sphere_nodes(100)
    nodes = base.nodes.copy()
    nodes[1] = nodes[0] + 1e-10      # nearly coincident pair
    cloud = PointCloud(nodes, nodes / np.linalg.norm(nodes, axis=1)[:, None])
    ops = build_operators(cloud, SPHERE_KERNEL)
    rng = np.random.default_rng(3)
    interp = interpolate(ops, rng.normal(size=100))
    assert ops.jitter > 0 or interp.residual <= 1e-8 or interp.ill_conditioned


# --- validation ----------------------------------------------------------------

def test_build_operators_validation():
    cloud = sphere_nodes(30)
    with pytest.raises(ValueError):
        build_operators(PointCloud(cloud.nodes), SPHERE_KERNEL)   # no normals
    with pytest.raises(ValueError):
        build_operators(cloud, KernelSpec("gaussian", ambient_dim=3))
    with pytest.raises(ValueError):
        build_operators(cloud, CIRCLE_KERNEL)                     # wrong dim


def test_nodal_shape_validation(circle30):
    _, ops = circle30
    with pytest.raises(ValueError):
        laplace_beltrami_nodal(ops, np.ones(7))
    with pytest.raises(ValueError):
        interpolate(ops, np.full(ops.n_nodes, np.nan))
    with pytest.raises(ValueError):
        p_laplacian_nodal(ops, np.ones(ops.n_nodes), 1.5)
