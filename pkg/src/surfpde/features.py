"""Polynomial feature libraries over differential-operator channels.

A candidate PDE right-hand side is a linear combination of monomials in a
small set of "channels": nodal values of u and of differential operators
applied to its kernel interpolant.  Channels are evaluated once per node
set; monomial columns are products of channel columns.

Channel kinds:
    u            the samples themselves
    grad         one component of the surface gradient
    lap          Laplace-Beltrami
    gradlap      one component of the surface gradient of the Laplacian
    bih          squared Laplace-Beltrami
    plap         p-Laplacian for a fixed p
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import InsufficientSnapshots, NonFiniteResult
from .operators import (
    DiscreteOperators,
    Interpolant,
    biharmonic_nodal,
    grad_of_laplacian_nodal,
    laplace_beltrami_nodal,
    p_laplacian_nodal,
    surface_gradient_nodal,
)

_KINDS = ("u", "grad", "lap", "gradlap", "bih", "plap")


@dataclass(frozen=True)
class Channel:
    kind: str
    component: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind in ("grad", "gradlap") and self.component is None:
            raise ValueError(f"{self.kind} channel needs a component index")
        if self.kind == "plap" and self.p is None:
            raise ValueError("plap channel needs a p value")

    @property
    def label(self) -> str:
        if self.kind == "u":
            return "u"
        if self.kind == "grad":
            return f"grad_{self.component}(u)"
        if self.kind == "lap":
            return "lap(u)"
        if self.kind == "gradlap":
            return f"gradlap_{self.component}(u)"
        if self.kind == "bih":
            return "bih(u)"
        p = self.p
        return f"plap_{int(p) if float(p).is_integer() else p}(u)"


@dataclass(frozen=True)
class FeatureMap:
    """Ordered tuple of channels defining the library alphabet."""

    channels: tuple[Channel, ...]

    @property
    def dim(self) -> int:
        return len(self.channels)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.channels)


def standard_map(ambient_dim: int) -> FeatureMap:
    """Channels (u, grad_1..grad_d, lap): dimension d + 2."""
    chans = [Channel("u")]
    chans += [Channel("grad", component=k) for k in range(ambient_dim)]
    chans.append(Channel("lap"))
    return FeatureMap(tuple(chans))


def biharmonic_map(ambient_dim: int) -> FeatureMap:
    """Standard channels extended by gradlap and bih: dimension 2d + 3."""
    chans = list(standard_map(ambient_dim).channels)
    chans += [Channel("gradlap", component=k) for k in range(ambient_dim)]
    chans.append(Channel("bih"))
    return FeatureMap(tuple(chans))


@dataclass(frozen=True)
class FeatureTerm:
    """One monomial z^alpha over the channels, with a printable label."""

    exponents: tuple[int, ...]
    label: str

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def _term_label(exponents: tuple[int, ...], labels: tuple[str, ...]) -> str:
    parts = []
    for c, a in enumerate(exponents):
        if a == 1:
            parts.append(labels[c])
        elif a > 1:
            parts.append(f"{labels[c]}^{a}")
    return "*".join(parts) if parts else "1"


def enumerate_terms(fmap: FeatureMap | int, ell: int) -> list[FeatureTerm]:
    """All monomials of total degree <= ell, graded lexicographic order.

    The constant term comes first, then degree-1 terms in channel order,
    and so on.  The count is C(dim + ell, ell).
    """
    if ell < 1:
        raise ValueError("polynomial degree ell must be at least 1")
    if isinstance(fmap, FeatureMap):
        dim, labels = fmap.dim, fmap.labels
    else:
        dim = int(fmap)
        if dim < 1:
            raise ValueError("channel dimension must be positive")
        labels = tuple(f"z{c}" for c in range(dim))
    terms = []
    for degree in range(ell + 1):
        for combo in combinations_with_replacement(range(dim), degree):
            exps = [0] * dim
            for c in combo:
                exps[c] += 1
            exps = tuple(exps)
            terms.append(FeatureTerm(exps, _term_label(exps, labels)))
    assert len(terms) == math.comb(dim + ell, ell)
    return terms


def evaluate_channels(ops: DiscreteOperators, interp: Interpolant,
                      fmap: FeatureMap) -> np.ndarray:
    """Nodal channel matrix, shape (N, fmap.dim).

    The u channel is the samples themselves; differential channels act on
    the interpolant through the nodal operator matrices.
    """
    values = interp.samples
    cache: dict[str, np.ndarray] = {}

    def grad():
        if "grad" not in cache:
            cache["grad"] = surface_gradient_nodal(ops, values)
        return cache["grad"]

    def lap():
        if "lap" not in cache:
            cache["lap"] = laplace_beltrami_nodal(ops, values)
        return cache["lap"]

    def gradlap():
        if "gradlap" not in cache:
            cache["gradlap"] = grad_of_laplacian_nodal(ops, values)
        return cache["gradlap"]

    cols = []
    for ch in fmap.channels:
        if ch.kind == "u":
            cols.append(values)
        elif ch.kind == "grad":
            cols.append(grad()[ch.component])
        elif ch.kind == "lap":
            cols.append(lap())
        elif ch.kind == "gradlap":
            cols.append(gradlap()[ch.component])
        elif ch.kind == "bih":
            cols.append(ops.L @ lap())
        else:
            cols.append(p_laplacian_nodal(ops, values, ch.p))
    return np.stack(cols, axis=1)


def assemble_library(channels: np.ndarray, terms: list[FeatureTerm]) -> np.ndarray:
    """Design matrix with one column per monomial term."""
    channels = np.asarray(channels, dtype=float)
    if channels.ndim != 2:
        raise ValueError("channels must be an (N, dim) matrix")
    n, dim = channels.shape
    A = np.ones((n, len(terms)))
    for t, term in enumerate(terms):
        if len(term.exponents) != dim:
            raise ValueError("term exponents do not match channel dimension")
        for c, a in enumerate(term.exponents):
            if a:
                A[:, t] *= channels[:, c] ** a
    if not np.all(np.isfinite(A)):
        raise NonFiniteResult("feature library contains non-finite entries")
    return A


@dataclass(frozen=True, eq=False)
class FeatureLibrary:
    """Evaluated design matrix together with its term descriptions."""

    fmap: FeatureMap
    terms: tuple[FeatureTerm, ...]
    matrix: np.ndarray

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)


def build_library(ops: DiscreteOperators, interp: Interpolant, fmap: FeatureMap,
                  ell: int) -> FeatureLibrary:
    """Evaluate channels and assemble the full degree-<=ell library."""
    terms = enumerate_terms(fmap, ell)
    channels = evaluate_channels(ops, interp, fmap)
    return FeatureLibrary(fmap, tuple(terms), assemble_library(channels, terms))


def sbdf2_channels(ops: DiscreteOperators, values: np.ndarray,
                   forcing: np.ndarray, dt: float,
                   j: int) -> tuple[np.ndarray, np.ndarray]:
    """Channels and regression target for one interior snapshot index.

    Follows the two-step semi-implicit multistep discretization: u and
    gradient channels use the extrapolation 2 u^j - u^{j-1}, the Laplacian
    channel is taken at j+1, and the target combines the backward
    difference (3u^{j+1} - 4u^j + u^{j-1}) / (2 dt) with the extrapolated
    forcing 2 f^j - f^{j-1}.  Valid for 1 <= j <= M-1 given snapshots
    0..M.
    """
    values = np.asarray(values, dtype=float)
    forcing = np.asarray(forcing, dtype=float)
    if values.ndim != 2 or values.shape[0] < 3:
        raise InsufficientSnapshots("need at least 3 snapshots for two-step forms")
    if forcing.shape != values.shape:
        raise ValueError("forcing must match values in shape")
    if not 1 <= j <= values.shape[0] - 2:
        raise ValueError(f"snapshot index {j} outside 1..{values.shape[0] - 2}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    extrap = 2.0 * values[j] - values[j - 1]
    cols = [extrap]
    cols += list(np.einsum("kij,j->ki", ops.D, extrap))
    cols.append(ops.L @ values[j + 1])
    channels = np.stack(cols, axis=1)
    lhs = (3.0 * values[j + 1] - 4.0 * values[j] + values[j - 1]) / (2.0 * dt)
    target = lhs + 2.0 * forcing[j] - forcing[j - 1]
    return channels, target


def eikonal_library(ops: DiscreteOperators, interp: Interpolant,
                    p_values) -> FeatureLibrary:
    """Degree-1 library [u, plap_{p_1}(u), ...] without a constant term."""
    p_values = [float(p) for p in p_values]
    if not p_values:
        raise ValueError("need at least one p value")
    if len(set(p_values)) != len(p_values):
        raise ValueError("p values must be distinct")
    chans = [Channel("u")] + [Channel("plap", p=p) for p in p_values]
    fmap = FeatureMap(tuple(chans))
    terms = []
    for c, ch in enumerate(fmap.channels):
        exps = tuple(1 if i == c else 0 for i in range(fmap.dim))
        terms.append(FeatureTerm(exps, ch.label))
    channels = evaluate_channels(ops, interp, fmap)
    return FeatureLibrary(fmap, tuple(terms), assemble_library(channels, terms))
