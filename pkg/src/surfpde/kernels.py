"""Radial kernels: a Bessel-type Sobolev family and Gaussians.

The Sobolev-space kernel of order ``tau`` on R^d is, up to a constant,

    Phi(x, y) = r^nu * K_nu(r),   r = |x - y|,   nu = tau - d/2,

where ``K_nu`` is the modified Bessel function of the second kind.  No
normalization constant is applied; interpolation coefficients absorb the
scale, so every derived quantity is unchanged.  For interpolation on a
surface of codimension ``codim`` a target smoothness order ``m`` maps to
``tau = m + codim / 2``.

The radial profile extends continuously to r = 0 with value
``2**(nu-1) * Gamma(nu)``, and its gradient follows from the identity
``d/dr [r^nu K_nu(r)] = -r^nu K_{nu-1}(r)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, kv

from .errors import UnsupportedOrder, UnsupportedSmoothness

# Below this separation the radial profile is replaced by its r -> 0 limit.
_R_SMALL = 1e-10

_FAMILIES = ("matern_sobolev", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with parameters, bound to an ambient dimension.

    For the ``matern_sobolev`` family, ``smoothness_m`` is the smoothness
    order on a surface of codimension ``codim`` inside R^ambient_dim.  For
    ``gaussian``, ``shape`` is sigma^2 and ``squared_exponent`` selects
    exp(-r^2/sigma^2) (default) versus exp(-r/sigma^2).
    """

    family: str
    ambient_dim: int
    smoothness_m: float | None = None
    codim: int = 1
    shape: float = 1.0
    squared_exponent: bool = True

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.ambient_dim < 1:
            raise ValueError("ambient_dim must be a positive integer")
        if self.family == "matern_sobolev":
            if self.smoothness_m is None:
                raise ValueError("matern_sobolev kernel requires smoothness_m")
            if self.codim < 1:
                raise ValueError("codim must be >= 1")
            if not self.tau > self.ambient_dim / 2:
                raise ValueError(
                    "positive definiteness requires tau > ambient_dim/2; "
                    f"got tau={self.tau} in R^{self.ambient_dim}")
        else:
            if self.shape <= 0:
                raise ValueError("gaussian kernel requires shape sigma^2 > 0")

    @property
    def tau(self) -> float:
        """Sobolev order in the ambient space."""
        if self.smoothness_m is None:
            raise ValueError("tau is only defined for the matern_sobolev family")
        return self.smoothness_m + self.codim / 2.0

    @property
    def bessel_order(self) -> float:
        """Order nu = tau - d/2 of the Bessel factor in the radial profile."""
        return self.tau - self.ambient_dim / 2.0


def bessel_k(nu: float, r) -> np.ndarray | float:
    """Modified Bessel function of the second kind K_nu(r) for r > 0.

    Supports non-negative integer and half-integer orders, the only ones
    the kernel family produces.
    """
    nu = float(nu)
    if nu < 0 or abs(2.0 * nu - round(2.0 * nu)) > 1e-12:
        raise UnsupportedOrder(
            f"order must be a non-negative integer or half-integer, got {nu}")
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("bessel_k requires strictly positive finite argument")
    out = kv(nu, arr)
    return out if isinstance(r, np.ndarray) else float(out)


def _check_matern_orders(spec: KernelSpec) -> float:
    nu = spec.bessel_order
    if nu < 0 or abs(2.0 * nu - round(2.0 * nu)) > 1e-12:
        raise UnsupportedOrder(
            f"kernel Bessel order nu={nu} is not a non-negative (half-)integer")
    return nu


def _radial_profile(nu: float, r: np.ndarray) -> np.ndarray:
    """phi(r) = r^nu K_nu(r), with the finite limit filled in at r ~ 0."""
    small = r < _R_SMALL
    safe = np.where(small, 1.0, r)
    vals = safe ** nu * kv(nu, safe)
    return np.where(small, 2.0 ** (nu - 1.0) * gamma(nu), vals)


def _radial_slope_over_r(nu: float, r: np.ndarray) -> np.ndarray:
    """phi'(r) / r = -r^(nu-1) K_{nu-1}(r), finite for nu > 1.

    This is -phi_{nu-1}(r), so the same limiting value applies at r ~ 0.
    """
    return -_radial_profile(nu - 1.0, r)


def _pairwise_distance(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _as_points(spec: KernelSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.ambient_dim:
        raise ValueError(
            f"points have dimension {X.shape[1]}, kernel expects {spec.ambient_dim}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    return X


def kernel_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """Matrix of kernel values Phi(x_i, y_j), shape (len(X), len(Y))."""
    X = _as_points(spec, X)
    Y = _as_points(spec, Y)
    r = _pairwise_distance(X, Y)
    if spec.family == "matern_sobolev":
        return _radial_profile(_check_matern_orders(spec), r)
    if spec.squared_exponent:
        return np.exp(-(r ** 2) / spec.shape)
    return np.exp(-r / spec.shape)


def kernel_gradient_matrices(spec: KernelSpec, X, Y) -> np.ndarray:
    """Gradients in the first argument, shape (d, len(X), len(Y)).

    Entry [k, i, j] is d/dx_k Phi(x, y_j) evaluated at x = x_i.
    """
    X = _as_points(spec, X)
    Y = _as_points(spec, Y)
    r = _pairwise_distance(X, Y)
    if spec.family == "matern_sobolev":
        nu = _check_matern_orders(spec)
        if nu <= 1:
            raise UnsupportedSmoothness(
                f"kernel gradient needs nu > 1 for continuity at r=0, got nu={nu}")
        slope = _radial_slope_over_r(nu, r)
    elif spec.squared_exponent:
        slope = -2.0 / spec.shape * np.exp(-(r ** 2) / spec.shape)
    else:
        # phi'(r)/r = -exp(-r/sigma^2) / (sigma^2 r), singular at r = 0.
        if np.any(r < _R_SMALL):
            raise UnsupportedSmoothness(
                "unsquared-exponent gaussian has no gradient at coincident points")
        slope = -np.exp(-r / spec.shape) / (spec.shape * r)
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ij,ijk->kij", slope, diff)


def kernel_value(spec: KernelSpec, x, y) -> float:
    """Kernel value Phi(x, y) for single points."""
    return float(kernel_matrix(spec, [x], [y])[0, 0])


def kernel_gradient_x(spec: KernelSpec, x, y) -> np.ndarray:
    """Gradient of Phi(x, y) in x, for single points.  Zero at x = y."""
    return kernel_gradient_matrices(spec, [x], [y])[:, 0, 0]
