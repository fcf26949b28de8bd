"""Command-line runner: configured chain runs, data simulation, prediction.

Artifacts are plain CSV (full double precision) plus a machine-readable
summary.json, so traces, histograms and autocorrelations can be plotted or
re-checked downstream without loss. Every command is a deterministic
function of its inputs and seed.

Exit codes: 0 success, 1 sampler failure (e.g. a Hessian that is not
negative-definite), 2 configuration or usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import ChainSummary, SummaryWindow, render_summary, summarize
from .errors import SnsError
from .models import GlmData, GlmTarget, LogDensityTarget, MvGaussianTarget
from .prediction import (PredictionMatrix, poisson_draw_predictor,
                         poisson_mean_predictor, predict, summarize_prediction)
from .sampler import ChainOutput, SamplerSpec, make_partition, run

ALL_FORMATS = ("csv", "json", "txt")
PREDICTORS = ("poisson-mean", "poisson-draw")


class ConfigError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


@dataclass
class RunConfig:
    """Parsed run configuration: target, start point, controls, outputs."""

    target: LogDensityTarget
    x_init: np.ndarray
    spec: SamplerSpec
    window: SummaryWindow
    out_dir: Path
    formats: tuple[str, ...]


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.replace(",", " ").split()])
    except ValueError as err:
        raise ConfigError(f"cannot parse vector {text!r}: {err}") from None


def _parse_matrix(text: str) -> np.ndarray:
    rows = [_parse_vector(row) for row in text.split(";") if row.strip()]
    if not rows or any(r.size != rows[0].size for r in rows):
        raise ConfigError(f"cannot parse matrix from {text!r}")
    return np.vstack(rows)


def _load_csv(path: Path, field: str) -> np.ndarray:
    if not path.exists():
        raise ConfigError(f"{field}: file {path} does not exist")
    try:
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except Exception as err:
        raise ConfigError(f"{field}: cannot parse {path}: {err}") from None


def load_run_config(path: Path, seed_override: int | None = None,
                    out_override: Path | None = None) -> RunConfig:
    """Read and validate an INI run configuration."""
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as err:
        raise ConfigError(f"{path}: {err}") from None
    base = path.parent

    def need(section: str, key: str) -> str:
        if not cp.has_option(section, key):
            raise ConfigError(f"{path}: missing [{section}] {key}")
        return cp.get(section, key)

    kind = need("target", "kind").strip().lower()
    if kind == "gaussian":
        mean = _parse_vector(need("target", "mean"))
        if cp.has_option("target", "prec"):
            prec = _parse_matrix(cp.get("target", "prec"))
        elif cp.has_option("target", "prec_file"):
            prec = np.loadtxt(base / cp.get("target", "prec_file"), delimiter=",", ndmin=2)
        else:
            raise ConfigError(f"{path}: [target] needs prec or prec_file for kind=gaussian")
        try:
            target: LogDensityTarget = MvGaussianTarget(mean, prec)
        except (ValueError, SnsError) as err:
            raise ConfigError(f"{path}: [target] invalid gaussian target: {err}") from None
    elif kind == "poisson-glm":
        x = _load_csv(base / need("target", "x"), f"{path}: [target] x")
        y = _load_csv(base / need("target", "y"), f"{path}: [target] y").ravel()
        try:
            target = GlmTarget(GlmData(X=x, y=y))
        except ValueError as err:
            raise ConfigError(f"{path}: [target] invalid GLM data: {err}") from None
    else:
        raise ConfigError(f"{path}: [target] kind must be gaussian or poisson-glm, got {kind!r}")

    def get_int(section: str, key: str, default=None):
        if not cp.has_option(section, key) or not cp.get(section, key).strip():
            return default
        try:
            return cp.getint(section, key)
        except ValueError:
            raise ConfigError(f"{path}: [{section}] {key} must be an integer") from None

    niter = get_int("sampler", "niter")
    if niter is None:
        raise ConfigError(f"{path}: missing [sampler] niter")
    nnr = get_int("sampler", "nnr", 0)
    seed = seed_override if seed_override is not None else get_int("sampler", "seed", 0)
    nsubset = get_int("sampler", "partition", None)
    part = None
    if nsubset is not None:
        try:
            part = make_partition(target.dim, nsubset)
        except ValueError as err:
            raise ConfigError(f"{path}: [sampler] partition: {err}") from None
    mh_diag = True
    if cp.has_option("sampler", "mh_diag"):
        try:
            mh_diag = cp.getboolean("sampler", "mh_diag")
        except ValueError:
            raise ConfigError(f"{path}: [sampler] mh_diag must be a boolean") from None
    try:
        spec = SamplerSpec(niter=niter, nnr=nnr, part=part, seed=seed,
                           collect_mh_diag=mh_diag)
    except ValueError as err:
        raise ConfigError(f"{path}: [sampler] {err}") from None

    if cp.has_option("sampler", "x_init"):
        x_init = _parse_vector(cp.get("sampler", "x_init"))
        if x_init.size == 1:
            x_init = np.full(target.dim, x_init[0])
        elif x_init.size != target.dim:
            raise ConfigError(
                f"{path}: [sampler] x_init has length {x_init.size}, "
                f"target dimension is {target.dim}"
            )
    else:
        x_init = np.zeros(target.dim)

    window = SummaryWindow(nburnin=get_int("window", "nburnin", None),
                           end=get_int("window", "end", None),
                           thin=get_int("window", "thin", 1) or 1)

    if out_override is not None:
        out_dir = out_override
    elif cp.has_option("output", "dir"):
        out_dir = Path(cp.get("output", "dir"))
    else:
        raise ConfigError(f"{path}: missing [output] dir (or pass --out)")

    formats = ALL_FORMATS
    if cp.has_option("output", "formats"):
        formats = tuple(tok.strip() for tok in cp.get("output", "formats").split(",") if tok.strip())
        unknown = [f for f in formats if f not in ALL_FORMATS]
        if unknown:
            raise ConfigError(f"{path}: [output] formats: unknown {unknown}, valid: {ALL_FORMATS}")

    return RunConfig(target=target, x_init=x_init, spec=spec, window=window,
                     out_dir=out_dir, formats=formats)


def _write_matrix_csv(path: Path, arr: np.ndarray, headers: list[str], fmt: str = "%.17g"):
    with open(path, "w") as fh:
        fh.write(",".join(headers) + "\n")
        np.savetxt(fh, np.atleast_2d(arr), delimiter=",", fmt=fmt)


def _write_diag_csv(path: Path, chain: ChainOutput):
    with open(path, "w") as fh:
        fh.write("iteration,subset,log_p,log_p_prop,log_q,log_q_prop,accepted\n")
        for it, entries in enumerate(chain.diags):
            for si, d in enumerate(entries):
                fh.write(f"{it + 1},{si + 1},{d.log_p:.17g},{d.log_p_prop:.17g},"
                         f"{d.log_q:.17g},{d.log_q_prop:.17g},{int(d.accepted)}\n")


def _json_safe(value):
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def _summary_json(summary: ChainSummary, spec: SamplerSpec) -> dict:
    return {
        "schema": 1,
        "dimension": summary.dim,
        "niter": summary.niter,
        "nnr": summary.nnr,
        "seed": spec.seed,
        "partition_subsets": summary.nsubsets,
        "window": {"nburnin": summary.nburnin, "end": summary.end, "thin": summary.thin},
        "acceptance_rate": summary.acceptance_rate,
        "reldev_mean": _json_safe(summary.reldev_mean),
        "nominal_sample_size": summary.nominal_sample_size,
        "coordinates": [
            {
                "name": f"x{j + 1}",
                "mean": summary.mean[j],
                "sd": summary.sd[j],
                "ess": _json_safe(summary.ess[j]),
                "q2.5": summary.q2_5[j],
                "q50": summary.median[j],
                "q97.5": summary.q97_5[j],
                "p_value": summary.p_value[j],
            }
            for j in range(summary.dim)
        ],
        "ess_summary": {k: _json_safe(v) for k, v in summary.ess_summary.items()},
    }


def cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(Path(args.config), seed_override=args.seed,
                             out_override=Path(args.out) if args.out else None)
    chain = run(config.x_init, config.target, config.spec)
    summary = summarize(chain, config.window, target=config.target)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    k = chain.dim
    if "csv" in config.formats:
        _write_matrix_csv(out / "samples.csv", chain.samples, [f"x{j + 1}" for j in range(k)])
        _write_matrix_csv(out / "lp.csv", chain.lp[:, None], ["lp"])
        if chain.diags is not None:
            _write_diag_csv(out / "diag.csv", chain)
    if "txt" in config.formats:
        (out / "summary.txt").write_text(render_summary(summary))
    if "json" in config.formats:
        with open(out / "summary.json", "w") as fh:
            json.dump(_summary_json(summary, config.spec), fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.stdout.write(render_summary(summary))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.kind != "poisson":
        raise ConfigError(f"unknown simulation kind {args.kind!r}, valid: poisson")
    if args.n < 1 or args.k < 1:
        raise ConfigError("--n and --k must be at least 1")
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(-0.5, 0.5, size=(args.n, args.k))
    beta = rng.uniform(-0.5, 0.5, size=args.k)
    y = rng.poisson(np.exp(x @ beta))

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_matrix_csv(out / "x.csv", x, [f"x{j + 1}" for j in range(args.k)])
        _write_matrix_csv(out / "y.csv", y[:, None], ["y"], fmt="%d")
        _write_matrix_csv(out / "beta_true.csv", beta[:, None], ["beta"])
    except OSError as err:
        raise ConfigError(f"cannot write to {out}: {err}") from None
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    chain_dir = Path(args.chain)
    samples = _load_csv(chain_dir / "samples.csv", "--chain samples.csv")
    lp_path = chain_dir / "lp.csv"
    lp = _load_csv(lp_path, "--chain lp.csv").ravel() if lp_path.exists() else np.zeros(len(samples))
    niter = samples.shape[0]
    chain = ChainOutput(samples=samples, lp=lp, accepted=[[] for _ in range(niter)],
                        diags=None, spec=SamplerSpec(niter=niter, seed=0),
                        gfit=None, nr_end_state=None)

    if args.predictor not in PREDICTORS:
        raise ConfigError(f"unknown predictor {args.predictor!r}, valid: {', '.join(PREDICTORS)}")
    x_new = _load_csv(Path(args.data), "--data")
    if x_new.shape[1] != samples.shape[1]:
        raise ConfigError(
            f"--data has {x_new.shape[1]} columns, chain dimension is {samples.shape[1]}"
        )

    window = SummaryWindow(nburnin=args.nburnin, end=args.end, thin=args.thin)
    try:
        window.resolve(niter)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    if args.predictor == "poisson-mean":
        pm = predict(chain, poisson_mean_predictor(x_new), window)
    else:
        pm = predict(chain, poisson_draw_predictor(x_new), window,
                     rng=np.random.default_rng(args.seed))

    out = Path(args.out) if args.out else chain_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix_csv(out / "prediction.csv", pm.values,
                      [f"s{j + 1}" for j in range(pm.nsamples)])
    ps = summarize_prediction(pm)
    table = np.column_stack([ps.mean, ps.sd, ps.ess, ps.q2_5, ps.median, ps.q97_5])
    _write_matrix_csv(out / "prediction_summary.csv", table,
                      ["mean", "sd", "ess", "q2.5", "q50", "q97.5"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snsampler",
        description="MCMC sampling of log-concave densities with locally "
                    "fitted Gaussian (Newton-step) proposals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured chain and write artifacts")
    p_run.add_argument("--config", required=True, help="INI config file")
    p_run.add_argument("--seed", type=int, default=None, help="override [sampler] seed")
    p_run.add_argument("--out", default=None, help="override [output] dir")
    p_run.set_defaults(func=cmd_run)

    p_sim = sub.add_parser("simulate", help="simulate GLM data to CSV files")
    p_sim.add_argument("--kind", required=True, help="generative model (poisson)")
    p_sim.add_argument("--n", type=int, required=True, help="number of observations")
    p_sim.add_argument("--k", type=int, required=True, help="number of coefficients")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_pred = sub.add_parser("predict", help="push chain samples through a predictor")
    p_pred.add_argument("--chain", required=True, help="directory with run artifacts")
    p_pred.add_argument("--predictor", required=True,
                        help=f"one of: {', '.join(PREDICTORS)}")
    p_pred.add_argument("--data", required=True, help="CSV of new design rows")
    p_pred.add_argument("--nburnin", type=int, default=None)
    p_pred.add_argument("--end", type=int, default=None)
    p_pred.add_argument("--thin", type=int, default=1)
    p_pred.add_argument("--seed", type=int, default=0, help="stream seed for draw predictors")
    p_pred.add_argument("--out", default=None, help="output directory (default: chain dir)")
    p_pred.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SnsError as err:
        print(f"sampler error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
