"""Exception types shared across the toolkit.

Invalid arguments (bad shapes, out-of-range parameters, malformed files)
raise plain ValueError.  Everything that can fail for a *numerical* reason
gets its own class below so callers can tell usage errors apart from
breakdowns of the computation itself.
"""

from __future__ import annotations


class SurfacePDEError(Exception):
    """Base class for toolkit-specific numerical failures."""


class GenerationFailure(SurfacePDEError):
    """Node generation could not produce the requested point count."""


class SingularGradientError(SurfacePDEError):
    """Implicit-function gradient vanished at a point being projected."""


class IllConditionedError(SurfacePDEError):
    """A kernel system stayed numerically singular after regularization.

    Carries the last condition-number estimate and the jitter levels tried.
    """

    def __init__(self, message: str, cond: float | None = None,
                 jitter_tried: tuple[float, ...] = ()):
        super().__init__(message)
        self.cond = cond
        self.jitter_tried = jitter_tried


class IllConditionedNeighborhood(SurfacePDEError):
    """A local PCA neighborhood was too degenerate to define a normal."""


class UnsupportedOrder(SurfacePDEError):
    """Bessel order outside the supported (half-)integer, non-negative set."""


class UnsupportedSmoothness(SurfacePDEError):
    """Kernel smoothness too low for the requested derivative."""


class NonFiniteResult(SurfacePDEError):
    """An overflow/NaN appeared in a computed quantity."""


class OracleScaleExceeded(SurfacePDEError):
    """Reference QP solver asked to handle more unknowns than it supports."""


class ExactFitError(SurfacePDEError):
    """Scaled sparse regression hit a zero residual; scale is undefined."""


class EmptyModelError(SurfacePDEError):
    """Sparse regression retained no terms at all."""


class InsufficientSnapshots(SurfacePDEError):
    """A time-series operation needs more snapshots than were provided."""


class NonConvergenceError(SurfacePDEError):
    """An iteration hit its step limit before reaching tolerance."""


class BlowUpError(SurfacePDEError):
    """Time stepping produced non-finite or explosively growing values."""
