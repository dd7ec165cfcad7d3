"""Batch command-line front end.

Every subcommand resolves a config (packaged default or ``--config`` file,
then command-line flags on top), validates it, runs, prints the result
table as CSV on stdout and, with ``--out``, writes CSV, a JSON summary and
plot-data files.

Exit codes: 0 success, 2 invalid input, 3 numerical or resource error,
4 a declared assertion failed.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_packaged
from .core import (
    InvalidInputError,
    MartingaleTiltError,
    PrecisionError,
    RangeError,
    ResourceError,
    UnsupportedModeError,
    UnsupportedModelError,
    check_A1,
    check_A1prime,
    check_A2,
    check_bernstein,
    moment_bound_check,
)
from .estimators import exact_tail_enumeration, lower_tail, normal_tail, tail_estimate
from .models import build_model, derive_seed
from .verify import (
    ExperimentGrid,
    calibrate_envelope_c,
    calibration_points,
    lemma31_check,
    lemma34_ks,
    lemma_tables,
    mdp_scan,
    resolve_lambda,
    theorem_ratio_scan,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_ASSERTION = 4

WORKERS_ENV = "MTILT_WORKERS"

RATIO_COLUMNS = ["model", "n", "x", "delta", "estimator", "N", "seed", "tail", "stderr",
                 "normal_tail", "ratio", "ratio_stderr", "env_lower", "env_upper", "flags"]

# packaged config used when no --config is given
DEFAULT_CONFIGS = {
    "check-conditions": "check_conditions",
    "tail": "tail",
    "ratio": "ratio",
    "enumerate": "enumerate",
    "lemmas": "lemma_grid",
    "mdp": "mdp",
    "calibrate": "calibration",
}


def fmt(v: Any) -> str:
    """CSV cell: floats as shortest round-trip decimal."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return ";".join(str(a) for a in v)
    return str(v)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()


@dataclass
class Series:
    """Plot data: named groups of rows sharing one header."""

    columns: list
    groups: dict = field(default_factory=dict)


@dataclass
class RunResult:
    table: Table
    summary: dict
    series: Series | None = None
    assertion_failed: bool = False
    message: str = ""


# --- config resolution --------------------------------------------------------

def _constants_overrides(block: dict) -> dict:
    out = {k: block[k] for k in ("c0", "c1", "delta", "alpha0") if k in block}
    if "c" in block:
        out["c_alpha0"] = block["c"]
    return out


def _model(block: dict, constants: dict, n: int | None = None):
    cfg = dict(block)
    if n is not None:
        cfg["n"] = int(n)
    if "n" not in cfg:
        raise InvalidInputError("model block needs n (or pass --n)")
    return build_model(cfg, _constants_overrides(constants))


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = load_packaged(DEFAULT_CONFIGS[args.command])
    raw = cfg.to_dict()
    raw["experiment"]["operation"] = args.command
    model = raw["model"]
    if args.model is not None and args.model != model.get("kind"):
        model = {"kind": args.model, "n": model.get("n", 16)}
        raw["experiment"].pop("models", None)
    for flag, key in (("n", "n"), ("amplitude", "amplitude"), ("cutoff", "cutoff"),
                      ("weights", "weights"), ("levels", "levels")):
        v = getattr(args, flag, None)
        if v is not None:
            model[key] = v
    raw["model"] = model
    consts = raw.setdefault("constants", {})
    for key in ("c0", "c1", "delta", "alpha0", "c"):
        v = getattr(args, key, None)
        if v is not None:
            consts[key] = v
    if not consts:
        raw.pop("constants")
    exp = raw["experiment"]
    single_x = args.command in ("tail", "mdp")
    if getattr(args, "x", None) is not None:
        if single_x:
            if len(args.x) != 1:
                raise InvalidInputError(f"{args.command} takes a single --x")
            exp["x"] = args.x[0]
        else:
            exp["x_values"] = list(args.x)
    for flag, key in (("estimator", "estimator"), ("lam", "lambda"), ("side", "side"),
                      ("n_values", "n_values"), ("lambda_values", "lambda_values"),
                      ("ks_n_values", "ks_n_values"), ("ks_lambda_values", "ks_lambda_values"),
                      ("beta", "beta"), ("c_max", "c_max"), ("bernstein_C", "bernstein_C"),
                      ("epsilon", "epsilon"), ("k_max", "k_max")):
        v = getattr(args, flag, None)
        if v is not None:
            exp[key] = v
    execution = raw.setdefault("execution", {})
    if os.environ.get(WORKERS_ENV):
        try:
            execution["workers"] = int(os.environ[WORKERS_ENV])
        except ValueError as exc:
            raise InvalidInputError(f"{WORKERS_ENV} must be an integer") from exc
    for key in ("N", "seed", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            execution[key] = v
    output = raw.setdefault("output", {})
    if args.out is not None:
        output["dir"] = args.out
    if args.prefix is not None:
        output["prefix"] = args.prefix
    if args.formats is not None:
        output["formats"] = list(args.formats)
    return ExperimentConfig.from_dict(raw)


def _lambda_token(text: str):
    if text.startswith("sqrt_n/"):
        return text
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number or sqrt_n/k token: {text!r}") from exc


# --- subcommands -------------------------------------------------------------

def run_check_conditions(cfg: ExperimentConfig) -> RunResult:
    exp = cfg.experiment
    m = _model(cfg.model, cfg.constants)
    k_max = exp.get("k_max", 12)
    reports = [check_A1(m, m.constants), check_A2(m, m.constants)]
    if "bernstein_C" in exp:
        reports.append(check_bernstein(m, exp["bernstein_C"], k_max))
    if "epsilon" in exp:
        reports.append(check_A1prime(m, exp["epsilon"], m.constants.c1, k_max))
    if reports[0].holds and k_max >= 3:
        reports.append(moment_bound_check(m, m.constants, k_max))
    table = Table(["model", "n", "condition", "measured", "bound", "holds"])
    for r in reports:
        table.rows.append([m.name, m.n, r.condition_name, r.measured, r.bound, r.holds])
    failed = [r.condition_name for r in reports if not r.holds]
    summary = {"model": m.name, "n": m.n,
               "constants": _consts_dict(m.constants),
               "conditions": {r.condition_name: {"measured": r.measured, "bound": r.bound,
                                                 "holds": r.holds} for r in reports}}
    msg = "all conditions hold" if not failed else "failed: " + ", ".join(failed)
    return RunResult(table, summary, assertion_failed=bool(failed), message=msg)


def _consts_dict(c) -> dict:
    return {"c0": c.c0, "c1": c.c1, "delta": c.delta, "alpha0": c.alpha0, "c": c.c_alpha0}


def _workers(cfg: ExperimentConfig) -> int:
    return int(cfg.execution_value("workers"))


def run_tail(cfg: ExperimentConfig) -> RunResult:
    exp = cfg.experiment
    m = _model(cfg.model, cfg.constants)
    x = float(exp.get("x", 0.0))
    estimator = exp.get("estimator", "importance")
    lam = exp.get("lambda")
    side = exp.get("side", "upper")
    N, seed, workers = cfg.execution_value("N"), cfg.execution_value("seed"), _workers(cfg)
    if side == "both":
        raise InvalidInputError("tail takes side 'upper' or 'lower'")
    if side == "upper":
        est = tail_estimate(m, x, estimator, lam, N, seed, workers)
    elif estimator == "enumeration":
        est = exact_tail_enumeration(m, x, "lower")
    else:
        est = lower_tail(m, x, estimator, lam, N, seed, workers=workers)
    table = Table(["model", "n", "x", "side", "estimator", "N", "seed", "lambda", "value",
                   "stderr", "log_value", "flags"])
    table.rows.append([m.name, m.n, x, side, est.estimator, est.replicates, est.seed,
                       est.lambda_used, est.value, est.stderr, est.log_value, est.flags])
    summary = {"model": m.name, "n": m.n, "x": x, "side": side, "estimator": est.estimator,
               "value": est.value, "stderr": est.stderr, "log_value": _json_float(est.log_value),
               "lambda": est.lambda_used, "replicates": est.replicates}
    return RunResult(table, summary, message=f"P = {est.value!r} (stderr {est.stderr!r})")


def _grid_models(cfg: ExperimentConfig) -> list:
    blocks = cfg.experiment.get("models") or [cfg.model]
    out = []
    for b in blocks:
        n = b.get("n", cfg.model.get("n", 16))
        out.append(_model(b, cfg.constants, n))
    return out


def _sides(exp: dict) -> tuple:
    side = exp.get("side", "both")
    return ("upper", "lower") if side == "both" else (side,)


def _ratio_rows(cfg: ExperimentConfig, default_estimator: str):
    exp = cfg.experiment
    models = _grid_models(cfg)
    n_values = exp.get("n_values") or [models[0].n]
    xs = exp.get("x_values") or [float(exp.get("x", 1.0))]
    grid = ExperimentGrid(models, n_values, x_values=xs, N=cfg.execution_value("N"),
                          seed=cfg.execution_value("seed"))
    c = cfg.constants.get("c")
    return theorem_ratio_scan(grid, exp.get("estimator", default_estimator), c,
                              _sides(exp), _workers(cfg))


def _ratio_table(rows) -> Table:
    table = Table(list(RATIO_COLUMNS))
    for r in rows:
        table.rows.append([r.model, r.n, r.x, r.delta, r.estimator, r.N, r.seed, r.tail,
                           r.stderr, r.normal_tail, r.ratio, r.ratio_stderr, r.env_lower,
                           r.env_upper, r.flags])
    return table


def _ratio_series(rows) -> Series:
    s = Series(["x", "ratio", "stderr", "lower", "upper"])
    for r in rows:
        s.groups.setdefault(f"{r.model} n={r.n} {r.side}", []).append(
            [r.x, r.ratio, r.ratio_stderr, r.env_lower, r.env_upper])
    return s


def run_ratio(cfg: ExperimentConfig) -> RunResult:
    rows = _ratio_rows(cfg, "importance")
    outside = [r for r in rows if not r.in_envelope]
    summary = {"points": len(rows), "outside_envelope": len(outside),
               "max_abs_log_ratio": _json_float(max((abs(math.log(r.ratio)) if r.ratio > 0 else math.inf
                                                     for r in rows), default=0.0))}
    return RunResult(_ratio_table(rows), summary, _ratio_series(rows),
                     message=f"{len(rows)} points, {len(outside)} outside the envelope")


def run_enumerate(cfg: ExperimentConfig) -> RunResult:
    exp = cfg.experiment
    m = _model(cfg.model, cfg.constants)
    xs = exp.get("x_values") or [float(exp.get("x", 0.0))]
    table = Table(["model", "n", "x", "side", "tail", "normal_tail", "ratio"])
    for x in xs:
        for side in _sides(exp):
            est = exact_tail_enumeration(m, float(x), side)
            nt = normal_tail(float(x))
            table.rows.append([m.name, m.n, float(x), side, est.value, nt, est.value / nt])
    summary = {"model": m.name, "n": m.n, "paths": 2 ** m.n, "points": len(table.rows)}
    return RunResult(table, summary, message=f"enumerated {2 ** m.n} paths")


def run_lemmas(cfg: ExperimentConfig) -> RunResult:
    exp = cfg.experiment
    models = _grid_models(cfg)
    c_max = float(exp.get("c_max", 1.0))
    N, seed, workers = cfg.execution_value("N"), cfg.execution_value("seed"), _workers(cfg)
    n_values = exp.get("n_values") or [models[0].n]
    grid = ExperimentGrid(models, n_values, exp.get("lambda_values", [1.0]), N=N, seed=seed)
    table = Table(["lemma", "model", "n", "lambda", "lhs", "rhs_shape", "fitted_c", "c_max", "pass"])
    series = Series(["n", "lambda", "fitted_c"])

    sized = [m.with_n(n) for m in models for n in n_values]
    for m, r in zip(sized, lemma31_check(sized, exp.get("k_max", 12))):
        table.rows.append(["lemma31", m.name, m.n, None, r.measured, r.bound,
                           r.measured / r.bound, 1.0, r.holds])
    l32, l33 = lemma_tables(grid, c_max)
    for name, reports in (("lemma32", l32), ("lemma33", l33)):
        for r in reports:
            d = r.detail
            table.rows.append([name, d["model"], d["n"], d["lambda"], r.lhs, r.rhs_shape,
                               r.fitted_c, r.c_max, r.passed])
            series.groups.setdefault(f"{name} {d['model']}", []).append([d["n"], d["lambda"], r.fitted_c])
    idx = 0
    for m in models:
        for n in exp.get("ks_n_values", []):
            for token in exp.get("ks_lambda_values", []):
                lam = resolve_lambda(token, n)
                ks = lemma34_ks(m, n, lam, N, derive_seed(seed, idx), workers)
                idx += 1
                rep = ks.report(c_max)
                table.rows.append(["lemma34", ks.model, n, lam, ks.ks, ks.bound_shape,
                                   ks.fitted_c, c_max, rep.passed])
                series.groups.setdefault(f"lemma34 {ks.model}", []).append([n, lam, ks.fitted_c])
    failed = [row for row in table.rows if row[-1] is False]
    summary = {"rows": len(table.rows), "failed": len(failed), "c_max": c_max,
               "max_fitted_c": {name: max((row[6] for row in table.rows if row[0] == name), default=0.0)
                                for name in ("lemma31", "lemma32", "lemma33", "lemma34")}}
    return RunResult(table, summary, series, assertion_failed=bool(failed),
                     message=f"{len(table.rows)} rows, {len(failed)} failed at c_max={c_max!r}")


def run_mdp(cfg: ExperimentConfig) -> RunResult:
    exp = cfg.experiment
    m = _model(cfg.model, cfg.constants)
    x = float(exp.get("x", 1.0))
    beta = float(exp.get("beta", 0.25))
    n_values = exp.get("n_values") or [m.n]
    rows = mdp_scan(m, x, n_values, beta, cfg.execution_value("N"),
                    cfg.execution_value("seed"), _workers(cfg))
    table = Table(["model", "n", "a_n", "x", "lambda", "value", "stderr", "target", "gap", "flags"])
    series = Series(["n", "gap"])
    for r in rows:
        table.rows.append([m.name, r.n, r.a_n, r.x, r.lambda_used, r.value, r.stderr, r.target,
                           r.gap, r.flags])
        series.groups.setdefault(m.name, []).append([r.n, r.gap])
    summary = {"model": m.name, "x": x, "beta": beta,
               "gaps": {str(r.n): _json_float(r.gap) for r in rows}}
    return RunResult(table, summary, series,
                     message="gaps " + ", ".join(f"n={r.n}: {r.gap:.4g}" for r in rows))


def run_calibrate(cfg: ExperimentConfig) -> RunResult:
    rows = _ratio_rows(cfg, "enumeration")
    c = calibrate_envelope_c(calibration_points(rows))
    table = _ratio_table(rows)
    summary = {"c": c, "points": len(rows)}
    return RunResult(table, summary, _ratio_series(rows), message=f"c = {c!r}")


RUNNERS = {
    "check-conditions": run_check_conditions,
    "tail": run_tail,
    "ratio": run_ratio,
    "enumerate": run_enumerate,
    "lemmas": run_lemmas,
    "mdp": run_mdp,
    "calibrate": run_calibrate,
}


def _json_float(v: float):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


# --- output --------------------------------------------------------------------

def emit_plot_data(series: Series, path: str | FsPath, svg: bool = False) -> list[FsPath]:
    """Write plain-text series (one block per group) and optionally an SVG chart.

    Values are formatted exactly as in the CSV output.
    """
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(series.columns)]
    multi = len(series.groups) > 1
    for name, rows in series.groups.items():
        if multi:
            lines.append(f"# series: {name}")
        lines.extend(" ".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    written = [path]
    if svg:
        svg_path = path.with_suffix(".svg")
        svg_path.write_text(svg_chart(series))
        written.append(svg_path)
    return written


def svg_chart(series: Series, width: int = 640, height: int = 400) -> str:
    """Self-contained SVG line chart of column 2 against column 1, one line per group."""
    pad = 50
    pts = [(float(r[0]), float(r[1])) for rows in series.groups.values() for r in rows
           if math.isfinite(float(r[0])) and math.isfinite(float(r[1]))]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if pts:
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        x1 = x1 if x1 > x0 else x0 + 1.0
        y1 = y1 if y1 > y0 else y0 + 1.0

        def sx(v):
            return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

        def sy(v):
            return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

        out.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
        out.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
        out.append(f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">'
                   f'{series.columns[0]} [{x0:.4g}, {x1:.4g}]</text>')
        out.append(f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})" '
                   f'text-anchor="middle">{series.columns[1]} [{y0:.4g}, {y1:.4g}]</text>')
        palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
        for k, (name, rows) in enumerate(series.groups.items()):
            good = [(float(r[0]), float(r[1])) for r in rows
                    if math.isfinite(float(r[0])) and math.isfinite(float(r[1]))]
            if not good:
                continue
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in good)
            color = palette[k % len(palette)]
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}">'
                       f'<title>{_xml(name)}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_outputs(cfg: ExperimentConfig, result: RunResult) -> list[FsPath]:
    directory = cfg.output_value("dir")
    if not directory:
        return []
    out_dir = FsPath(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.output_value('prefix')}{cfg.operation.replace('-', '_')}"
    formats = cfg.output_value("formats")
    written = []
    if "csv" in formats:
        p = out_dir / f"{stem}.csv"
        p.write_text(result.table.to_csv())
        written.append(p)
    if "json" in formats:
        p = out_dir / f"{stem}.json"
        doc = {
            "operation": cfg.operation,
            "version": __version__,
            "config": cfg.resolved(),
            "result": result.summary,
            "assertion_failed": result.assertion_failed,
            "metadata": {
                "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
        }
        p.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
        written.append(p)
    if result.series is not None and ("dat" in formats or "svg" in formats):
        dat = out_dir / f"{stem}.dat"
        written.extend(emit_plot_data(result.series, dat, svg="svg" in formats))
        if "dat" not in formats:
            dat.unlink()
            written.remove(dat)
    return written


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martingale-tilt",
        description="Exponential tilting and tail-ratio experiments for martingale partial sums.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("config and model")
    g.add_argument("--config", help="JSON experiment config; flags override its values")
    g.add_argument("--model", choices=["rademacher", "heteroscedastic", "truncated_gaussian",
                                       "bernstein_mixture"])
    g.add_argument("--n", type=int)
    g.add_argument("--amplitude", type=float)
    g.add_argument("--cutoff", type=float)
    g.add_argument("--weights", type=float, nargs="+")
    g.add_argument("--levels", type=float, nargs="+")
    g.add_argument("--c0", type=float)
    g.add_argument("--c1", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--alpha0", type=float)
    g.add_argument("--c", type=float, help="envelope constant")
    e = common.add_argument_group("execution and output")
    e.add_argument("--N", type=int, help="Monte Carlo replicates")
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    e.add_argument("--out", help="output directory for CSV, JSON and plot data")
    e.add_argument("--prefix")
    e.add_argument("--formats", nargs="+", choices=["csv", "json", "dat", "svg"])

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("check-conditions", "evaluate the moment and variance conditions")
    p.add_argument("--bernstein-C", dest="bernstein_C", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)

    p = add("tail", "one tail-probability estimate")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--estimator", choices=["naive", "importance", "enumeration"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--side", choices=["upper", "lower"])

    for name, help_text in (("ratio", "tail ratio against the normal tail with envelope"),
                            ("calibrate", "fit the envelope constant on a reference grid")):
        p = add(name, help_text)
        p.add_argument("--x", type=float, nargs="+")
        p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
        p.add_argument("--estimator", choices=["naive", "importance", "enumeration"])
        p.add_argument("--side", choices=["upper", "lower", "both"])

    p = add("enumerate", "exact tails of a two-point model by path enumeration")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--side", choices=["upper", "lower", "both"])

    p = add("lemmas", "drift, cumulant, moment and Kolmogorov-distance tables")
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
    p.add_argument("--lambda-values", dest="lambda_values", type=_lambda_token, nargs="+")
    p.add_argument("--ks-n-values", dest="ks_n_values", type=int, nargs="*")
    p.add_argument("--ks-lambda-values", dest="ks_lambda_values", type=_lambda_token, nargs="*")
    p.add_argument("--c-max", dest="c_max", type=float)
    p.add_argument("--k-max", dest="k_max", type=int)

    p = add("mdp", "moderate-deviation scan with a_n = n^beta")
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--beta", type=float)
    p.add_argument("--n-values", dest="n_values", type=int, nargs="+")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    try:
        cfg = resolve_config(args)
        result = RUNNERS[cfg.operation](cfg)
        sys.stdout.write(result.table.to_csv())
        sys.stdout.flush()
        write_outputs(cfg, result)
    except (RangeError, ResourceError, PrecisionError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, UnsupportedModelError, UnsupportedModeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MartingaleTiltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{cfg.operation}: {result.message}", file=sys.stderr)
    return EXIT_ASSERTION if result.assertion_failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
