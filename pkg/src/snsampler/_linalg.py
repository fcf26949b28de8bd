"""Thin LAPACK wrappers shared by the proposal and the built-in targets.

The raw ``scipy.linalg.lapack`` functions are used instead of the high-level
wrappers because they skip per-call validation (the sampler factorizes one
small matrix per transition) and because ``dpotrf`` reports the failing
pivot, which we surface in errors.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs, dtrtrs

from .errors import NotNegativeDefiniteError


def cholesky_lower(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises NotNegativeDefiniteError naming the 1-based pivot index when a
    leading minor is not positive definite.
    """
    c, info = dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotNegativeDefiniteError(
            f"{what} is not positive-definite: Cholesky pivot {info} failed",
            pivot=int(info),
        )
    if info < 0:
        raise ValueError(f"invalid argument {-info} passed to dpotrf")
    return c


def solve_cholesky(chol_lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the lower factor L."""
    x, info = dpotrs(chol_lower, b, lower=1)
    if info != 0:
        raise ValueError(f"invalid argument {-info} passed to dpotrs")
    return x


def solve_lower_transposed(chol_lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve L^T x = b given the lower-triangular L."""
    x, info = dtrtrs(chol_lower, b, lower=1, trans=1)
    if info != 0:
        raise ValueError(f"triangular solve failed with info={info}")
    return x
