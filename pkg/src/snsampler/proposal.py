"""Local Gaussian proposal fitted from a second-order expansion.

At a point x0 with gradient g and negative-definite Hessian H, the matched
Gaussian has precision -H and mean x0 - H^{-1} g (the full Newton step).
Only the lower Cholesky factor L of the precision is kept: sampling,
density evaluation and the Newton solve all consume it directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import cholesky_lower, solve_cholesky, solve_lower_transposed
from .models import LN_2PI, DiffState


@dataclass(frozen=True)
class GaussianFit:
    """Mean and precision factorization of a local Gaussian proposal.

    ``prec_chol`` is lower-triangular with positive diagonal and satisfies
    L L' = -H; ``log_det_prec`` equals log det(-H). Instances are immutable;
    sampling needs an exclusively held random stream per chain.
    """

    mean: np.ndarray
    prec_chol: np.ndarray
    log_det_prec: float

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng) -> np.ndarray:
        """Draw one point; consumes exactly ``dim`` normal deviates from rng."""
        z = rng.standard_normal(self.dim)
        return self.mean + solve_lower_transposed(self.prec_chol, z)

    def log_pdf(self, x: np.ndarray) -> float:
        """Gaussian log-density at x with mean/precision from this fit."""
        d = np.asarray(x, dtype=float) - self.mean
        w = self.prec_chol.T @ d
        return -0.5 * self.dim * LN_2PI + 0.5 * self.log_det_prec - 0.5 * float(w @ w)


def fit_gaussian(at: np.ndarray, ds: DiffState) -> GaussianFit:
    """Fit the local Gaussian at ``at`` from the target's DiffState there.

    The mean is obtained from two triangular solves against L (never an
    explicit inverse). Floating-point asymmetry in the Hessian is tolerated
    up to 1e-8 and symmetrized away before factorizing; an indefinite
    Hessian raises NotNegativeDefiniteError with the failing pivot, since
    the target then violates the sampler's requirements at this point.
    """
    at = np.asarray(at, dtype=float)
    if at.size != ds.dim:
        raise ValueError(f"point length {at.size} does not match DiffState dim {ds.dim}")
    if not (np.isfinite(ds.f) and np.all(np.isfinite(ds.g)) and np.all(np.isfinite(ds.h))):
        raise ValueError("cannot fit a proposal from non-finite derivatives")
    h = ds.h
    if not np.allclose(h, h.T, rtol=1e-8, atol=1e-8):
        raise ValueError("Hessian is not symmetric within tolerance 1e-8")
    a = -0.5 * (h + h.T)  # symmetrized negated Hessian
    chol = cholesky_lower(a, what="negated Hessian")
    mean = at + solve_cholesky(chol, ds.g)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return GaussianFit(mean=mean, prec_chol=chol, log_det_prec=log_det)
