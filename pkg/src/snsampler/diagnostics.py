"""Chain summaries: coordinate statistics, ESS, acceptance, reldev.

All functions are pure in the chain output and safe to call concurrently.
The effective sample size follows the autoregressive spectral convention:
an AR model is fitted to the demeaned series by AIC (Yule-Walker via
Levinson-Durbin) and the spectral density at frequency zero is read off
the fitted coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import LogDensityTarget
from .sampler import ChainOutput

#: |quadratic change| below this is treated as "sample sits at the maximum"
#: and skipped when averaging relative deviations.
RELDEV_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class SummaryWindow:
    """Burn-in / end / thinning selection applied before summarizing.

    Defaults (resolved against the chain length): discard the first half,
    keep through the last iteration, no thinning. Retained row indices are
    nburnin, nburnin+thin, ... below end (0-based).
    """

    nburnin: int | None = None
    end: int | None = None
    thin: int = 1

    def resolve(self, niter: int) -> tuple[int, int, int]:
        nburnin = niter // 2 if self.nburnin is None else int(self.nburnin)
        end = niter if self.end is None else int(self.end)
        thin = int(self.thin)
        if thin < 1:
            raise ValueError(f"thin must be a positive integer, got {thin}")
        if nburnin < 0:
            raise ValueError(f"nburnin must be nonnegative, got {nburnin}")
        if end > niter:
            raise ValueError(f"end {end} exceeds the chain length {niter}")
        if nburnin >= end:
            raise ValueError(
                f"window is empty: nburnin {nburnin} leaves nothing before end {end}"
            )
        return nburnin, end, thin

    def rows(self, niter: int) -> np.ndarray:
        nburnin, end, thin = self.resolve(niter)
        return np.arange(nburnin, end, thin)


@dataclass(frozen=True)
class ChainSummary:
    """Per-coordinate statistics plus global diagnostics for one chain."""

    dim: int
    niter: int
    nnr: int
    nsubsets: int | None
    nburnin: int
    end: int
    thin: int
    nominal_sample_size: int
    mean: np.ndarray
    sd: np.ndarray
    ess: np.ndarray
    q2_5: np.ndarray
    median: np.ndarray
    q97_5: np.ndarray
    p_value: np.ndarray
    acceptance_rate: float
    reldev_mean: float | None
    ess_summary: dict[str, float]


def ess(x: np.ndarray) -> float:
    """Effective sample size of a scalar chain of at least 10 draws.

    n * var(x) / s0, where s0 is the AR-fit spectral density at frequency
    zero. Clamped to (0, n]; a constant series returns n by convention.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise ValueError(f"ess needs at least 10 draws, got {n}")
    var1 = float(np.var(x, ddof=1))
    if not var1 > 0.0:
        return float(n)
    s0 = _ar_spectrum_at_zero(x)
    if not (np.isfinite(s0) and s0 > 0.0):
        return float(n)
    raw = n * var1 / s0
    return float(min(float(n), max(raw, np.finfo(float).tiny)))


def _ar_spectrum_at_zero(x: np.ndarray) -> float:
    """Spectral density at frequency 0 of the AIC-best Yule-Walker AR fit."""
    n = x.size
    xd = x - x.mean()
    order_max = int(min(n - 1, math.floor(10.0 * math.log10(n))))
    c = np.empty(order_max + 1)
    for lag in range(order_max + 1):
        c[lag] = xd[: n - lag] @ xd[lag:] / n

    # Levinson-Durbin recursion, keeping the AIC-best order.
    v = c[0]
    phi = np.empty(0)
    best_aic = n * math.log(v)
    best_order, best_phi, best_v = 0, phi, v
    for m in range(1, order_max + 1):
        if v <= 0.0:
            break
        proj = float(phi @ c[m - 1:0:-1]) if m > 1 else 0.0
        rc = (c[m] - proj) / v
        phi = np.append(phi - rc * phi[::-1], rc)
        v = v * (1.0 - rc * rc)
        if v <= 0.0:
            break
        aic = n * math.log(v) + 2.0 * m
        if aic < best_aic:
            best_aic, best_order, best_phi, best_v = aic, m, phi.copy(), v

    if n - best_order - 1 <= 0:
        return float("nan")
    var_pred = best_v * n / (n - best_order - 1)
    one_minus_sum = 1.0 - float(np.sum(best_phi))
    return var_pred / (one_minus_sum * one_minus_sum)


def sample_p_value(x: np.ndarray) -> float:
    """Two-sided empirical tail mass of 0: 2*min(#pos, #neg)/n, in [0, 1]."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise ValueError("sample_p_value needs at least one draw")
    npos = int(np.count_nonzero(x > 0))
    nneg = int(np.count_nonzero(x < 0))
    return min(1.0, 2.0 * min(npos, nneg) / x.size)


def significance_code(p: float) -> str:
    """Display stars for a p-value (thresholds 0.001 / 0.01 / 0.05 / 0.1)."""
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    if p <= 0.1:
        return "."
    return ""


def reldev_mean(chain: ChainOutput, target: LogDensityTarget,
                window: SummaryWindow | None = None) -> float:
    """Mean relative deviation of log-density change from its quadratic model.

    The quadratic model is built at the maximum located by the Newton
    phase (the state after the last Newton iteration). For each retained
    sample, df = f(x) - f(max) is compared with the quadratic prediction
    dq = g'(x-max) + (x-max)'H(x-max)/2 and the signed relative deviations
    (df - dq)/|dq| are averaged; samples with |dq| below 1e-12 are skipped.
    Near zero for targets that are close to Gaussian; grows with the size
    of third-order terms, which is when mixing degrades.
    """
    if chain.spec.nnr < 1:
        raise ValueError(
            "reldev_mean needs a chain with at least one Newton iteration "
            "(nnr >= 1) so the maximum of the log-density is located"
        )
    if chain.diags is None:
        raise ValueError("reldev_mean needs a chain run with collect_mh_diag enabled")
    window = window if window is not None else SummaryWindow()
    rows = window.rows(chain.niter)
    x_hat = chain.nr_end_state
    ds = target.evaluate(x_hat)

    d = chain.samples[rows] - x_hat
    dq = d @ ds.g + 0.5 * np.einsum("ij,jk,ik->i", d, ds.h, d)
    df = chain.lp[rows] - ds.f
    keep = np.abs(dq) >= RELDEV_DENOM_FLOOR
    if not keep.any():
        return float("nan")
    return float(np.mean((df[keep] - dq[keep]) / np.abs(dq[keep])))


def summarize(chain: ChainOutput, window: SummaryWindow | None = None,
              target: LogDensityTarget | None = None) -> ChainSummary:
    """Windowed chain summary.

    The acceptance rate counts every MH transition whose iteration falls in
    the window (each subset transition separately when partitioned);
    thinning affects only the sample statistics. When ``target`` is given
    and the chain has a Newton phase with diagnostics, the relative
    deviation from the quadratic model is included.
    """
    window = window if window is not None else SummaryWindow()
    nburnin, end, thin = window.resolve(chain.niter)
    rows = np.arange(nburnin, end, thin)
    x = chain.samples[rows]
    nretained = rows.size

    flags = [flag for it in range(nburnin, end) for flag in chain.accepted[it]]
    if not flags:
        raise ValueError("summary window contains no MH transitions")
    acceptance = float(np.mean(flags))

    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1) if nretained > 1 else np.zeros(chain.dim)
    q = np.percentile(x, [2.5, 50.0, 97.5], axis=0)
    if nretained >= 10:
        ess_vals = np.array([ess(x[:, j]) for j in range(chain.dim)])
    else:
        ess_vals = np.full(chain.dim, np.nan)
    p_vals = np.array([sample_p_value(x[:, j]) for j in range(chain.dim)])

    reldev = None
    if target is not None and chain.spec.nnr >= 1 and chain.diags is not None:
        reldev = reldev_mean(chain, target, window)

    if np.all(np.isfinite(ess_vals)):
        qs = np.percentile(ess_vals, [25.0, 50.0, 75.0])
        ess_summary = {
            "min": float(ess_vals.min()), "q1": float(qs[0]),
            "median": float(qs[1]), "mean": float(ess_vals.mean()),
            "q3": float(qs[2]), "max": float(ess_vals.max()),
        }
    else:
        ess_summary = {k: float("nan") for k in ("min", "q1", "median", "mean", "q3", "max")}

    return ChainSummary(
        dim=chain.dim, niter=chain.niter, nnr=chain.spec.nnr,
        nsubsets=chain.spec.part.nsubsets if chain.spec.part is not None else None,
        nburnin=nburnin, end=end, thin=thin, nominal_sample_size=nretained,
        mean=mean, sd=sd, ess=ess_vals, q2_5=q[0], median=q[1], q97_5=q[2],
        p_value=p_vals, acceptance_rate=acceptance, reldev_mean=reldev,
        ess_summary=ess_summary,
    )


def render_summary(s: ChainSummary) -> str:
    """Plain-text rendering of a ChainSummary (field order is stable)."""
    lines = ["stochastic newton sampler summary",
             f"dimensions:            {s.dim}"]
    if s.nsubsets is not None:
        lines.append(f"partition subsets:     {s.nsubsets}")
    lines += [
        f"total iterations:      {s.niter}",
        f"newton iterations:     {s.nnr}",
        f"burn-in iterations:    {s.nburnin}",
        f"end iteration:         {s.end}",
        f"thinning interval:     {s.thin}",
        f"acceptance rate:       {s.acceptance_rate:.6g}",
    ]
    if s.reldev_mean is not None:
        lines.append(f"mean relative deviation from quadratic fit: {s.reldev_mean:.6g}")
    lines.append(f"coordinate statistics  (nominal sample size: {s.nominal_sample_size})")
    header = f"{'':>6} {'mean':>12} {'sd':>12} {'ess':>10} {'q2.5':>12} {'median':>12} {'q97.5':>12} {'p':>7}"
    lines.append(header)
    for j in range(s.dim):
        stars = significance_code(s.p_value[j])
        lines.append(
            f"x{j + 1:<5d} {s.mean[j]:>12.6g} {s.sd[j]:>12.6g} {s.ess[j]:>10.4g} "
            f"{s.q2_5[j]:>12.6g} {s.median[j]:>12.6g} {s.q97_5[j]:>12.6g} "
            f"{s.p_value[j]:>7.4g} {stars}"
        )
    lines.append("significance: '***' <= 0.001 < '**' <= 0.01 < '*' <= 0.05 < '.' <= 0.1")
    e = s.ess_summary
    lines.append(
        "ess summary: "
        f"min={e['min']:.4g} q1={e['q1']:.4g} median={e['median']:.4g} "
        f"mean={e['mean']:.4g} q3={e['q3']:.4g} max={e['max']:.4g}"
    )
    return "\n".join(lines) + "\n"
