"""Dense symmetric positive-definite solves with escalating regularization.

Kernel Gram matrices become numerically singular as nodes crowd together.
Rather than failing outright, factorization retries with a small multiple
of the average diagonal added to the diagonal, walking a fixed ladder of
levels.  The level that succeeded and a cheap condition estimate ride along
with the factor so callers can report them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import IllConditionedError

# Relative jitter levels, scaled by trace(A)/n before use.
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)


@dataclass
class SPDFactor:
    """Cholesky factor of A + jitter * I, with solve attached."""

    factor: tuple
    jitter: float
    cond_estimate: float

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve(self.factor, b)


def factor_spd(A: np.ndarray, ladder: tuple[float, ...] = JITTER_LADDER) -> SPDFactor:
    """Cholesky-factor a symmetric matrix, escalating jitter on failure."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("factor_spd expects a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("factor_spd requires finite entries")
    scale = float(np.trace(A)) / n
    tried = []
    for level in ladder:
        jitter = level * scale
        tried.append(jitter)
        B = A + jitter * np.eye(n) if jitter else A.copy()
        try:
            c, low = cho_factor(B, lower=True, overwrite_a=True, check_finite=False)
        except LinAlgError:
            continue
        diag = np.abs(np.diagonal(c))
        cond_estimate = float((diag.max() / diag.min()) ** 2)
        return SPDFactor((c, low), jitter, cond_estimate)
    raise IllConditionedError(
        f"matrix stayed non-positive-definite after jitter ladder {tried}",
        jitter_tried=tuple(tried))


def solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One-shot jittered SPD solve."""
    return factor_spd(A).solve(np.asarray(b, dtype=float))
