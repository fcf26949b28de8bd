"""Sample-based prediction: push retained states through a user function.

Summaries are taken only after the function has been applied to every
retained sample, never the other way round, so nonlinear predictors and
their uncertainty come out right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import SummaryWindow, ess
from .sampler import ChainOutput


@dataclass(frozen=True)
class PredictionMatrix:
    """M prediction targets by S retained samples, column j from sample j.

    ``kind`` is "deterministic" for mean-style predictors and "stochastic"
    for posterior-predictive draws.
    """

    values: np.ndarray
    kind: str

    @property
    def ntargets(self) -> int:
        return self.values.shape[0]

    @property
    def nsamples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PredictionSummary:
    """Row-wise statistics of a PredictionMatrix."""

    mean: np.ndarray
    sd: np.ndarray
    ess: np.ndarray
    q2_5: np.ndarray
    median: np.ndarray
    q97_5: np.ndarray
    nsamples: int


def predict(chain: ChainOutput, fpred: Callable, window: SummaryWindow | None = None,
            rng=None) -> PredictionMatrix:
    """Apply ``fpred`` to every retained sample, columns ordered by iteration.

    Deterministic predictors are called as ``fpred(x)``. Stochastic ones
    (posterior-predictive draws) must take an explicit stream, ``fpred(x,
    rng)``, and are evaluated sequentially so the run is reproducible from
    the stream's seed.
    """
    window = window if window is not None else SummaryWindow()
    rows = window.rows(chain.niter)
    retained = chain.samples[rows]

    columns = []
    m = None
    for x in retained:
        out = np.asarray(fpred(x) if rng is None else fpred(x, rng), dtype=float).ravel()
        if m is None:
            m = out.size
        elif out.size != m:
            raise ValueError(
                f"predictor output length changed across samples ({m} then {out.size})"
            )
        columns.append(out)
    values = np.stack(columns, axis=1)
    return PredictionMatrix(values=values, kind="stochastic" if rng is not None else "deterministic")


def summarize_prediction(pm: PredictionMatrix) -> PredictionSummary:
    """Row-wise mean, sd, ess and quantiles; needs at least 10 samples."""
    s = pm.nsamples
    if s < 10:
        raise ValueError(f"prediction summary needs at least 10 samples, got {s}")
    v = pm.values
    q = np.percentile(v, [2.5, 50.0, 97.5], axis=1)
    ess_vals = np.array([ess(v[i]) for i in range(pm.ntargets)])
    return PredictionSummary(
        mean=v.mean(axis=1), sd=v.std(axis=1, ddof=1), ess=ess_vals,
        q2_5=q[0], median=q[1], q97_5=q[2], nsamples=s,
    )


def poisson_mean_predictor(x_new: np.ndarray) -> Callable:
    """Mean-response predictor for Poisson regression: exp(X_new @ beta)."""
    x_new = np.asarray(x_new, dtype=float)

    def fpred(beta):
        return np.exp(x_new @ beta)

    return fpred


def poisson_draw_predictor(x_new: np.ndarray) -> Callable:
    """Posterior-predictive draws for Poisson regression (stochastic)."""
    x_new = np.asarray(x_new, dtype=float)

    def fpred(beta, rng):
        return rng.poisson(np.exp(x_new @ beta)).astype(float)

    return fpred
