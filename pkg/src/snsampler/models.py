"""Target log-densities with analytic gradient and Hessian.

A target is anything with a ``dim`` attribute and an ``evaluate(x)`` method
returning a :class:`DiffState`. Built-ins cover the multivariate Gaussian
and one-parameter GLM likelihoods assembled from scalar base-distribution
derivatives (currently Poisson with log link).

Targets are immutable after construction and may be evaluated concurrently
from multiple threads; every evaluation allocates its own output.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from . import kernels
from ._linalg import cholesky_lower

LN_2PI = float(np.log(2.0 * np.pi))

#: Linear predictors beyond this magnitude are rejected instead of letting
#: exp saturate; a silent inf would corrupt the Hessian factorization later.
EXP_SAFE_BOUND = 700.0


@dataclass(frozen=True)
class DiffState:
    """Log-density value, gradient and Hessian at one point.

    Attributes
    ----------
    f : float
        Log-density in nats.
    g : ndarray, shape (K,)
        Gradient of the log-density.
    h : ndarray, shape (K, K)
        Hessian of the log-density, symmetric within tolerance.
    """

    f: float
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if g.ndim != 1:
            raise ValueError("gradient must be a 1-D vector")
        if h.shape != (g.size, g.size):
            raise ValueError(
                f"Hessian shape {h.shape} does not match gradient length {g.size}"
            )
        object.__setattr__(self, "f", float(self.f))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return self.g.size

    def validate(self, sym_rtol: float = 1e-8) -> None:
        """Check finiteness and Hessian symmetry; raises ValueError on failure."""
        if not np.isfinite(self.f):
            raise ValueError("log-density value is not finite")
        if not np.all(np.isfinite(self.g)):
            raise ValueError("gradient has non-finite entries")
        if not np.all(np.isfinite(self.h)):
            raise ValueError("Hessian has non-finite entries")
        if not np.allclose(self.h, self.h.T, rtol=sym_rtol, atol=sym_rtol):
            raise ValueError("Hessian is not symmetric within tolerance")


@runtime_checkable
class LogDensityTarget(Protocol):
    """What the sampler needs from a target: a dimension and an evaluator."""

    dim: int

    def evaluate(self, x: np.ndarray) -> DiffState: ...


@dataclass(frozen=True)
class FunctionTarget:
    """Adapter turning a plain ``x -> (f, g, h)`` callable into a target."""

    dim: int
    fn: Callable[[np.ndarray], tuple]

    def evaluate(self, x: np.ndarray) -> DiffState:
        f, g, h = self.fn(np.asarray(x, dtype=float))
        return DiffState(f, np.atleast_1d(np.asarray(g, dtype=float)),
                         np.atleast_2d(np.asarray(h, dtype=float)))


class MvGaussianTarget:
    """Multivariate Gaussian log-density with fixed mean and precision.

    The log-density is exactly quadratic, so the locally fitted proposal
    coincides with the target everywhere; useful as a correctness anchor.
    """

    def __init__(self, mean: np.ndarray, prec: np.ndarray):
        mean = np.asarray(mean, dtype=float).ravel()
        prec = np.asarray(prec, dtype=float)
        k = mean.size
        if prec.shape != (k, k):
            raise ValueError(f"precision shape {prec.shape} does not match mean length {k}")
        if not np.allclose(prec, prec.T, rtol=1e-8, atol=1e-8):
            raise ValueError("precision matrix is not symmetric within tolerance")
        chol = cholesky_lower(prec, what="precision matrix")
        self._mean = mean
        self._prec = prec
        self._log_det_prec = 2.0 * float(np.sum(np.log(np.diag(chol))))
        self.dim = k

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def prec(self) -> np.ndarray:
        return self._prec

    def evaluate(self, x: np.ndarray) -> DiffState:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"state length {x.size} does not match dimension {self.dim}")
        d = x - self._mean
        pd = self._prec @ d
        f = -0.5 * self.dim * LN_2PI + 0.5 * self._log_det_prec - 0.5 * float(d @ pd)
        return DiffState(f, -pd, -self._prec.copy())


def eval_mvgaussian_target(x: np.ndarray, mean: np.ndarray, prec: np.ndarray) -> DiffState:
    """One-shot Gaussian evaluation; see :class:`MvGaussianTarget` for reuse."""
    return MvGaussianTarget(mean, prec).evaluate(x)


@dataclass(frozen=True)
class GlmData:
    """Design matrix and response vector for a one-parameter GLM."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError("X must be a 2-D design matrix")
        n, k = X.shape
        if n < 1 or k < 1:
            raise ValueError("X needs at least one row and one column")
        if not np.all(np.isfinite(X)):
            raise ValueError("X has non-finite entries")
        if y.size != n:
            raise ValueError(f"y length {y.size} does not match {n} rows of X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def nobs(self) -> int:
        return self.X.shape[0]

    @property
    def ncoef(self) -> int:
        return self.X.shape[1]


class ScalarBaseModel(ABC):
    """Per-observation log-likelihood derivatives wrt the linear predictor.

    A base model supplies (f0, g0, h0)(u, y): the log-likelihood of one
    observation and its first and second derivatives in the scalar predictor
    u. The GLM expander turns these into the full-coefficient f, g, H. New
    one-parameter families plug in by subclassing.
    """

    name: str = "base"

    @abstractmethod
    def fgh(self, u: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return per-observation (f0, g0, h0) arrays."""

    def validate_response(self, y: np.ndarray) -> None:
        """Raise ValueError when the response is invalid for this family."""


class PoissonBase(ScalarBaseModel):
    """Poisson log-pmf with log link.

    f0 = y*u - exp(u) - log(y!), g0 = y - exp(u), h0 = -exp(u). h0 < 0
    everywhere, so the expanded Hessian is negative-definite whenever the
    design has full column rank. The log(y!) constant is kept so f equals
    the true log-likelihood (it cancels in MH ratios but matters for
    reported log-density traces).
    """

    name = "poisson"

    def __init__(self, backend: str = "auto"):
        self._fgh = kernels.get_impl(backend).poisson_fgh
        self.backend = backend if backend != "auto" else kernels.BACKEND

    def fgh(self, u, y):
        return self._fgh(u, y)

    def validate_response(self, y):
        y = np.asarray(y)
        if y.size and (np.any(y < 0) or np.any(y != np.floor(y))):
            raise ValueError("Poisson responses must be nonnegative integers")


def poisson_base(u, y) -> tuple:
    """Evaluate the Poisson base derivatives at scalar or array arguments."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    y_arr = np.broadcast_to(np.asarray(y, dtype=float), u_arr.shape).copy()
    f0, g0, h0 = kernels.poisson_fgh(u_arr, y_arr)
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(f0[0]), float(g0[0]), float(h0[0])
    return f0, g0, h0


def expand_glm_1par(beta: np.ndarray, data: GlmData, base: ScalarBaseModel) -> DiffState:
    """Assemble the full-coefficient (f, g, H) from scalar base derivatives.

    With u = X @ beta: f = sum_i f0(u_i, y_i), g = X' g0, H = X' diag(h0) X.
    """
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != data.ncoef:
        raise ValueError(
            f"beta length {beta.size} does not match {data.ncoef} design columns"
        )
    u = data.X @ beta
    f0, g0, h0 = base.fgh(u, data.y)
    g = data.X.T @ g0
    h = (data.X * h0[:, None]).T @ data.X
    return DiffState(float(np.sum(f0)), g, h)


class GlmTarget:
    """Log-likelihood target for a one-parameter GLM."""

    def __init__(self, data: GlmData, base: ScalarBaseModel | None = None):
        base = base if base is not None else PoissonBase()
        base.validate_response(data.y)
        self._data = data
        self._base = base
        self.dim = data.ncoef

    @property
    def data(self) -> GlmData:
        return self._data

    @property
    def base(self) -> ScalarBaseModel:
        return self._base

    def evaluate(self, beta: np.ndarray) -> DiffState:
        return expand_glm_1par(beta, self._data, self._base)
