"""Metropolis-Hastings transitions with locally fitted Gaussian proposals.

One MH transition (``sns_step``) fits the proposal at the current point,
draws a candidate, refits at the candidate to evaluate the reverse density,
and accepts with probability min(1, r). The non-stochastic mode
(``nr_step``) instead moves to the line-searched Newton point, which is
guaranteed not to decrease the log-density. ``run`` drives a chain that
spends its first ``nnr`` iterations in Newton mode, optionally cycling a
coordinate partition (one full cycle per iteration, Gibbs style).

Random-stream discipline: each proposal consumes exactly K standard normal
deviates, and the accept/reject uniform is drawn only when r < 1 (r >= 1
accepts outright). This fixed consumption order is what makes runs
reproducible from the seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .errors import LineSearchFailure, SnsError
from .models import DiffState, LogDensityTarget
from .proposal import GaussianFit, fit_gaussian

ARMIJO_C = 1e-4
MAX_HALVINGS = 50


@dataclass(frozen=True)
class MhDiag:
    """The four MH test components and the decision for one transition."""

    log_p: float
    log_p_prop: float
    log_q: float
    log_q_prop: float
    accepted: bool


@dataclass(frozen=True)
class Partition:
    """Disjoint coordinate subsets covering 0..K-1 (0-based indices)."""

    subsets: tuple[np.ndarray, ...]

    def __post_init__(self):
        converted = []
        for s in self.subsets:
            arr = np.asarray(s, dtype=np.intp).ravel().copy()
            arr.setflags(write=False)
            converted.append(arr)
        object.__setattr__(self, "subsets", tuple(converted))

    @property
    def nsubsets(self) -> int:
        return len(self.subsets)


def make_partition(k: int, nsubset: int) -> Partition:
    """Split 0..k-1 into ``nsubset`` contiguous, nearly equal blocks."""
    if k < 1:
        raise ValueError("k must be positive")
    if not 1 <= nsubset <= k:
        raise ValueError(f"nsubset must be in [1, {k}], got {nsubset}")
    return Partition(tuple(np.array_split(np.arange(k), nsubset)))


def check_partition(part: Partition, k: int) -> list[str]:
    """Return a list of violation messages; empty means the partition is valid."""
    violations = []
    seen = np.zeros(k, dtype=bool)
    for si, s in enumerate(part.subsets):
        if s.size == 0:
            violations.append(f"subset {si + 1} is empty")
            continue
        for idx in s:
            if idx < 0 or idx >= k:
                violations.append(f"index {idx} in subset {si + 1} is out of range for k={k}")
            elif seen[idx]:
                violations.append(f"index {idx} appears in more than one subset")
            else:
                seen[idx] = True
    uncovered = np.flatnonzero(~seen)
    for idx in uncovered:
        violations.append(f"index {idx} is not covered by any subset")
    return violations


@dataclass(frozen=True)
class SamplerSpec:
    """All controls for one chain run."""

    niter: int
    nnr: int = 0
    part: Partition | None = None
    seed: int = 0
    collect_mh_diag: bool = True

    def __post_init__(self):
        if self.niter < 1:
            raise ValueError("niter must be at least 1")
        if not 0 <= self.nnr <= self.niter:
            raise ValueError(f"nnr must be in [0, niter], got nnr={self.nnr}, niter={self.niter}")


@dataclass
class ChainOutput:
    """Everything a run produces.

    ``samples`` holds the post-decision state of every iteration and ``lp``
    its log-density. ``accepted`` has one flag per MH transition per
    iteration (empty in Newton iterations, one per subset when
    partitioned); ``diags`` carries the matching MhDiag records when the
    run collected them. ``gfit`` is the Gaussian fit carried out of the
    final iteration (restricted to the last subset when partitioned), and
    ``nr_end_state`` the state right after the last Newton iteration.
    """

    samples: np.ndarray
    lp: np.ndarray
    accepted: list[list[bool]]
    diags: list[list[MhDiag]] | None
    spec: SamplerSpec
    gfit: GaussianFit | None
    nr_end_state: np.ndarray | None

    @property
    def niter(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


class SnsStepResult(NamedTuple):
    x: np.ndarray
    diag: MhDiag
    gfit: GaussianFit


class NrStepResult(NamedTuple):
    x: np.ndarray
    gfit: GaussianFit
    f: float


class PartitionedStepResult(NamedTuple):
    x: np.ndarray
    diags: list[MhDiag]
    f: float
    gfit: GaussianFit


def sns_step(x_old: np.ndarray, target: LogDensityTarget, rng,
             gfit_old: GaussianFit | None = None) -> SnsStepResult:
    """One MH transition with the locally fitted Gaussian proposal.

    Evaluates the target at ``x_old``, fits the proposal there (or reuses
    ``gfit_old``, which must be the fit at ``x_old``), draws the candidate,
    evaluates and refits at the candidate, and forms
    r = exp((f_prop - f_old) + (log q_old - log q_prop)). The returned fit
    belongs to the post-decision state, so the caller can feed it back into
    the next transition and skip one factorization.
    """
    x_old = np.asarray(x_old, dtype=float)
    ds_old = target.evaluate(x_old)
    gfit = gfit_old if gfit_old is not None else fit_gaussian(x_old, ds_old)

    x_prop = gfit.sample(rng)
    log_q_prop = gfit.log_pdf(x_prop)

    ds_prop = target.evaluate(x_prop)
    gfit_prop = fit_gaussian(x_prop, ds_prop)
    log_q_old = gfit_prop.log_pdf(x_old)

    log_r = (ds_prop.f - ds_old.f) + (log_q_old - log_q_prop)
    if log_r >= 0.0:
        accepted = True  # r >= 1 accepts without touching the stream
    else:
        accepted = rng.random() < math.exp(log_r)

    diag = MhDiag(log_p=ds_old.f, log_p_prop=ds_prop.f,
                  log_q=log_q_old, log_q_prop=log_q_prop, accepted=accepted)
    if accepted:
        return SnsStepResult(x=x_prop, diag=diag, gfit=gfit_prop)
    return SnsStepResult(x=x_old, diag=diag, gfit=gfit)


def nr_step(x_old: np.ndarray, target: LogDensityTarget) -> NrStepResult:
    """One Newton-Raphson ascent step with backtracking line search.

    The step direction is the fitted-proposal mean minus the current point
    (the full Newton step). The step length starts at 1 and is halved until
    the Armijo condition f(x + a*d) >= f(x) + c*a*g'd holds (c = 1e-4, at
    most 50 halvings). With a zero gradient the point is already the
    maximum and is returned unchanged; otherwise the accepted step strictly
    increases f whenever the increase is resolvable in floating point.
    """
    x_old = np.asarray(x_old, dtype=float)
    ds = target.evaluate(x_old)
    gfit = fit_gaussian(x_old, ds)
    if not np.any(ds.g):
        return NrStepResult(x=x_old, gfit=gfit, f=ds.f)

    delta = gfit.mean - x_old
    slope = float(ds.g @ delta)  # g' A^{-1} g > 0 away from the maximum
    alpha = 1.0
    f_trial = -np.inf
    for _ in range(MAX_HALVINGS + 1):
        x_trial = x_old + alpha * delta
        f_trial = target.evaluate(x_trial).f
        if f_trial >= ds.f + ARMIJO_C * alpha * slope:
            return NrStepResult(x=x_trial, gfit=gfit, f=f_trial)
        alpha *= 0.5
    raise LineSearchFailure(
        f"no acceptable step after {MAX_HALVINGS} halvings "
        f"(f_old={ds.f!r}, last trial f={f_trial!r})",
        f_old=ds.f, f_last=float(f_trial),
    )


class _RestrictedTarget:
    """Full target viewed along a coordinate subset at a fixed base point.

    Evaluation calls the underlying full-space target and slices the
    gradient and Hessian; the value is the full-space log-density, whose
    constant off-subset part cancels in MH ratios.
    """

    def __init__(self, target: LogDensityTarget, x_base: np.ndarray, idx: np.ndarray):
        self._target = target
        self._x_base = np.array(x_base, dtype=float)
        self._idx = idx
        self.dim = int(idx.size)

    def evaluate(self, z: np.ndarray) -> DiffState:
        x = self._x_base.copy()
        x[self._idx] = z
        ds = self._target.evaluate(x)
        return DiffState(ds.f, ds.g[self._idx], ds.h[np.ix_(self._idx, self._idx)])


StepMode = Literal["mcmc", "nr"]


def step_partitioned(x_old: np.ndarray, target: LogDensityTarget, partition: Partition,
                     rng, mode: StepMode = "mcmc") -> PartitionedStepResult:
    """One full Gibbs cycle over the partition subsets.

    Each subset is updated with a restricted sns_step (or nr_step in Newton
    mode) and committed before the next subset is visited. The returned
    diags list has one entry per subset in MCMC mode and is empty in Newton
    mode; ``f`` is the log-density of the final committed state.
    """
    x = np.array(x_old, dtype=float)
    diags: list[MhDiag] = []
    f_last = math.nan
    gfit_last: GaussianFit | None = None
    for si, idx in enumerate(partition.subsets):
        restricted = _RestrictedTarget(target, x, idx)
        try:
            if mode == "nr":
                res_nr = nr_step(x[idx], restricted)
                x[idx] = res_nr.x
                f_last = res_nr.f
                gfit_last = res_nr.gfit
            else:
                res = sns_step(x[idx], restricted, rng, None)
                x[idx] = res.x
                diags.append(res.diag)
                f_last = res.diag.log_p_prop if res.diag.accepted else res.diag.log_p
                gfit_last = res.gfit
        except SnsError as err:
            err.subset = si + 1
            raise
    assert gfit_last is not None
    return PartitionedStepResult(x=x, diags=diags, f=f_last, gfit=gfit_last)


def run(x_init: np.ndarray, target: LogDensityTarget, spec: SamplerSpec) -> ChainOutput:
    """Drive a chain: ``nnr`` Newton iterations, then MH iterations.

    In the MH phase the post-decision Gaussian fit is carried into the next
    transition so the proposal is only refitted when the state moved. The
    whole run is a deterministic function of (x_init, target, spec).
    """
    x = np.asarray(x_init, dtype=float).ravel().copy()
    k = target.dim
    if x.size != k:
        raise ValueError(f"x_init length {x.size} does not match target dimension {k}")
    if spec.part is not None:
        violations = check_partition(spec.part, k)
        if violations:
            raise ValueError("invalid partition: " + "; ".join(violations))

    rng = np.random.default_rng(spec.seed)
    samples = np.empty((spec.niter, k))
    lp = np.empty(spec.niter)
    accepted: list[list[bool]] = []
    diags: list[list[MhDiag]] | None = [] if spec.collect_mh_diag else None
    carry_fit: GaussianFit | None = None  # valid at the current x, MH phase only
    last_fit: GaussianFit | None = None
    nr_end_state: np.ndarray | None = None

    for it in range(spec.niter):
        try:
            if it < spec.nnr:
                if spec.part is not None:
                    part_res = step_partitioned(x, target, spec.part, rng, mode="nr")
                    x, f_cur, last_fit = part_res.x, part_res.f, part_res.gfit
                else:
                    nr_res = nr_step(x, target)
                    x, f_cur, last_fit = nr_res.x, nr_res.f, nr_res.gfit
                carry_fit = None  # fit was taken at the pre-step point
                accepted.append([])
                if diags is not None:
                    diags.append([])
            else:
                if spec.part is not None:
                    part_res = step_partitioned(x, target, spec.part, rng, mode="mcmc")
                    x, f_cur, last_fit = part_res.x, part_res.f, part_res.gfit
                    accepted.append([d.accepted for d in part_res.diags])
                    if diags is not None:
                        diags.append(part_res.diags)
                else:
                    step_res = sns_step(x, target, rng, carry_fit)
                    x = step_res.x
                    d = step_res.diag
                    f_cur = d.log_p_prop if d.accepted else d.log_p
                    carry_fit = last_fit = step_res.gfit
                    accepted.append([d.accepted])
                    if diags is not None:
                        diags.append([d])
        except SnsError as err:
            if err.iteration is None:
                err.iteration = it + 1
            raise
        samples[it] = x
        lp[it] = f_cur
        if it == spec.nnr - 1:
            nr_end_state = x.copy()

    return ChainOutput(samples=samples, lp=lp, accepted=accepted, diags=diags,
                       spec=spec, gfit=last_fit, nr_end_state=nr_end_state)
