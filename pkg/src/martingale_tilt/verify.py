"""Numerical pass/fail tables for the lemma bounds, the tail ratio and the MDP.

Grid points are independent; Monte Carlo points draw from seeds derived
from (experiment seed, grid index) so tables are reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import special, stats

from .core import (
    BoundReport,
    ConditionReport,
    InvalidInputError,
    PrecisionError,
    RangeError,
    moment_bound_check,
)
from .estimators import (
    Estimate,
    EnvelopeParams,
    _blocks,
    _naive_estimate,
    _run_tails,
    envelope,
    envelope_shape,
    exact_tail_enumeration,
    is_tail,
    map_blocks,
    mdp_point,
    normal_tail,
    simulate_block,
)
from .models import MartingaleModel, RngStream, derive_seed
from .tilting import B_n, Psi_n, _check_tilt, enumerate_paths

KS_BAND = 1.36
HISTORY_SAMPLES = 10_000
ENUMERATE_HISTORIES_MAX_N = 12
MAX_REL_STDERR = 0.02

# smallest envelope constant covering both tails of the Rademacher model,
# n = 8..16, x in {0.5, 1, 2}, by exact enumeration (see reference_c())
REFERENCE_C = 0.3162481843295896


def resolve_lambda(token, n: int) -> float:
    """A tilt value or a token ``"sqrt_n/k"`` meaning sqrt(n) / k."""
    if isinstance(token, str):
        head, _, den = token.partition("/")
        if head != "sqrt_n" or not den:
            raise InvalidInputError(f"unknown lambda token {token!r}")
        return math.sqrt(n) / float(den)
    lam = float(token)
    if not lam >= 0:
        raise InvalidInputError(f"lambda must be >= 0, got {token!r}")
    return lam


@dataclass
class ExperimentGrid:
    """Models crossed with n values and tilt or level values.

    Models act as prototypes: each grid point uses ``model.with_n(n)``.
    """

    models: list
    n_values: list
    lambda_values: list = field(default_factory=list)
    x_values: list = field(default_factory=list)
    N: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.models or not self.n_values:
            raise InvalidInputError("grid needs at least one model and one n")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidInputError(f"N must be a positive integer, got {self.N!r}")
        for model in self.models:
            for n in self.n_values:
                m = model.with_n(n)
                for token in self.lambda_values:
                    lam = resolve_lambda(token, n)
                    if lam > m.constants.lambda_max * (1.0 + 1e-12):
                        raise RangeError(
                            f"{m.name}: lambda={lam} exceeds c0 sqrt(n)/4 = {m.constants.lambda_max} at n={n}"
                        )

    def lambda_points(self) -> Iterator[tuple[int, MartingaleModel, float]]:
        idx = 0
        for model in self.models:
            for n in self.n_values:
                m = model.with_n(n)
                for token in self.lambda_values:
                    yield idx, m, resolve_lambda(token, n)
                    idx += 1

    def x_points(self) -> Iterator[tuple[int, MartingaleModel, float]]:
        idx = 0
        for model in self.models:
            for n in self.n_values:
                m = model.with_n(n)
                for x in self.x_values:
                    yield idx, m, float(x)
                    idx += 1


# --- moment, drift and cumulant bounds ---------------------------------------

def lemma31_check(models: Sequence[MartingaleModel], k_max: int = 12) -> list[ConditionReport]:
    """Moment bound k! (c0 sqrt(n))^-k c1 at each model's declared constants."""
    return [moment_bound_check(m, m.constants, k_max) for m in models]


def history_totals(model: MartingaleModel, lam: float, seed: int = 0,
                   samples: int = HISTORY_SAMPLES) -> tuple[np.ndarray, np.ndarray, str]:
    """B_n(lam) and Psi_n(lam) over a set of histories.

    i.i.d. models have a single value; two-point models with small n are
    enumerated; otherwise histories are sampled under P_lam.
    """
    if model.iid:
        return np.array([B_n(model, lam)]), np.array([Psi_n(model, lam)]), "closed_form"
    if model.two_point and model.n <= ENUMERATE_HISTORIES_MAX_N:
        paths = enumerate_paths(model, lam)
        return paths.drift_sum, paths.log_mgf_sum, "enumerated"
    batch = model.sample_terminal(lam, samples, RngStream(seed).generator)
    return batch.drift_sum, batch.log_mgf_sum, "sampled"


def _lemma_tables(grid: ExperimentGrid, c_max: float, which: tuple[str, ...]) -> dict:
    out: dict = {w: [] for w in which}
    for idx, m, lam in grid.lambda_points():
        _check_tilt(lam, m.constants)
        drift_sums, log_mgf_sums, how = history_totals(m, lam, derive_seed(grid.seed, idx))
        d2 = m.constants.delta ** 2
        rn = m.sqrt_n
        pid = f"{m.name},n={m.n},lambda={lam!r}"
        detail = {"model": m.name, "n": m.n, "lambda": lam, "delta": m.constants.delta,
                  "histories": how, "count": int(drift_sums.size)}
        if "lemma32" in out:
            lhs = float(np.max(np.abs(drift_sums - lam)))
            out["lemma32"].append(BoundReport.build(pid, lhs, lam * d2 + lam * lam / rn, c_max, detail))
        if "lemma33" in out:
            lhs = float(np.max(np.abs(log_mgf_sums - 0.5 * lam * lam)))
            shape = lam * lam * d2 + lam ** 3 / rn
            out["lemma33"].append(BoundReport.build(pid, lhs, shape, c_max, detail))
    return out


def lemma32_check(grid: ExperimentGrid, c_max: float = 1.0) -> list[BoundReport]:
    """|B_n(lam) - lam| against lam delta^2 + lam^2 / sqrt(n)."""
    return _lemma_tables(grid, c_max, ("lemma32",))["lemma32"]


def lemma33_check(grid: ExperimentGrid, c_max: float = 1.0) -> list[BoundReport]:
    """|Psi_n(lam) - lam^2/2| against lam^2 delta^2 + lam^3 / sqrt(n)."""
    return _lemma_tables(grid, c_max, ("lemma33",))["lemma33"]


def lemma_tables(grid: ExperimentGrid, c_max: float = 1.0) -> tuple[list, list]:
    """Both tables from one pass over the histories."""
    out = _lemma_tables(grid, c_max, ("lemma32", "lemma33"))
    return out["lemma32"], out["lemma33"]


# --- Kolmogorov distance of the tilted residual ------------------------------

@dataclass(frozen=True)
class KsResult:
    model: str
    n: int
    lam: float
    N: int
    seed: int
    ks: float
    band: float
    bound_shape: float
    fitted_c: float

    def report(self, c_max: float) -> BoundReport:
        detail = {"ks": self.ks, "band": self.band, "N": self.N}
        return BoundReport.build(f"{self.model},n={self.n},lambda={self.lam!r}",
                                 max(self.ks - self.band, 0.0), self.bound_shape, c_max, detail)


def _residual_block(task) -> np.ndarray:
    model, lam, seed, block, size = task
    return simulate_block(model, lam, seed, block, size).residual


def tilted_residuals(model: MartingaleModel, lam: float, N: int, seed: int = 0,
                     workers: int = 1) -> np.ndarray:
    """N draws of Y_n(lam) = X_n - B_n(lam) under P_lam."""
    _check_tilt(lam, model.constants)
    tasks = [(model, lam, seed, b, size) for b, size in _blocks(N)]
    return np.concatenate(map_blocks(_residual_block, tasks, workers))


def lemma34_ks(model: MartingaleModel, n: int, lam: float, N: int, seed: int = 0,
               workers: int = 1) -> KsResult:
    """Kolmogorov distance between Y_n(lam) under P_lam and the standard normal."""
    if N < 1000:
        raise InvalidInputError(f"Kolmogorov-distance check needs N >= 1000, got {N}")
    m = model.with_n(n) if model.n != n else model
    y = tilted_residuals(m, lam, N, seed, workers)
    ks = float(stats.ks_1samp(y, special.ndtr).statistic)
    band = KS_BAND / math.sqrt(N)
    shape = lam / m.sqrt_n + math.log(n) / m.sqrt_n + m.constants.delta
    excess = max(ks - band, 0.0)
    if shape == 0.0:
        fitted = 0.0 if excess == 0.0 else math.inf
    else:
        fitted = excess / shape
    return KsResult(m.name, n, float(lam), int(N), int(seed), ks, band, shape, fitted)


# --- Theorem: tail ratio scan ------------------------------------------------

@dataclass(frozen=True)
class RatioRow:
    model: str
    n: int
    x: float
    delta: float
    estimator: str
    N: int
    seed: int | None
    tail: float
    stderr: float
    normal_tail: float
    ratio: float
    ratio_stderr: float
    env_lower: float
    env_upper: float
    side: str
    in_envelope: bool
    flags: tuple = ()


def _side_estimates(m: MartingaleModel, xs: list, estimator: str, N: int, seed: int,
                    workers: int, sides: Sequence[str]) -> dict:
    est: dict = {}
    if estimator == "enumeration":
        for x in xs:
            for side in sides:
                est[(x, side)] = exact_tail_enumeration(m, x, side)
    elif estimator == "naive":
        # every level and both tails from one set of plain paths
        queries = [(x, side) for x in xs for side in sides]
        counts = _run_tails(m, 0.0, queries, N, seed, workers, weighted=False)
        for q, c in zip(queries, counts):
            est[q] = _naive_estimate(float(c[0]), int(N), seed)
    elif estimator == "importance":
        for j, x in enumerate(xs):
            s = derive_seed(seed, j)
            for side in sides:
                target = m if side == "upper" else m.mirrored()
                est[(x, side)] = is_tail(target, max(x, 0.0), None, N, s, workers)
    else:
        raise InvalidInputError(f"unknown estimator {estimator!r}")
    return est


def theorem_ratio_scan(grid: ExperimentGrid, estimator: str = "importance", c: float | None = None,
                       sides: Sequence[str] = ("upper", "lower"),
                       workers: int = 1) -> list[RatioRow]:
    """Tail ratios against 1 - Phi(x) with the envelope at constant c.

    ``c`` defaults to :data:`REFERENCE_C`.  Points beyond x <= alpha0 sqrt(n)
    are flagged ``outside_range``; two-point and mixture models are flagged
    ``lattice``.
    """
    c = REFERENCE_C if c is None else float(c)
    rows: list[RatioRow] = []
    group = 0
    for model in grid.models:
        for n in grid.n_values:
            m = model.with_n(n)
            xs = [float(x) for x in grid.x_values]
            seed = derive_seed(grid.seed, group)
            group += 1
            ests = _side_estimates(m, xs, estimator, grid.N, seed, workers, sides)
            for x in xs:
                for side in sides:
                    rows.append(_ratio_row(m, x, side, ests[(x, side)], c))
    return rows


def _ratio_row(m: MartingaleModel, x: float, side: str, est: Estimate, c: float) -> RatioRow:
    consts = m.constants
    denom = normal_tail(x)
    if not denom > 1e-300:
        raise RangeError(f"normal tail at x={x} is below the underflow floor")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lo, hi = envelope(EnvelopeParams(max(x, 0.0), m.n, consts.delta, c, consts.alpha0))
    r = est.value / denom
    inside = bool(lo <= r <= hi)
    flags = [side]
    if m.lattice:
        flags.append("lattice")
    if x > consts.alpha0 * m.sqrt_n or consts.delta > consts.alpha0:
        flags.append("outside_range")
    flags.extend(est.flags)
    flags.append("in_envelope" if inside else "outside_envelope")
    return RatioRow(m.name, m.n, x, consts.delta, est.estimator, est.replicates, est.seed,
                    est.value, est.stderr, denom, r, est.stderr / denom, lo, hi, side,
                    inside, tuple(flags))


# --- moderate deviations -------------------------------------------------------

@dataclass(frozen=True)
class MdpRow:
    n: int
    a_n: float
    x: float
    lambda_used: float
    value: float
    stderr: float
    target: float
    gap: float
    flags: tuple = ()


def mdp_scan(model: MartingaleModel, x: float, n_values: Sequence[int], beta: float,
             N: int, seed: int = 0, workers: int = 1, tilt: str = "proxy") -> list[MdpRow]:
    """(1/a_n^2) log P(X_n > a_n x) along n with a_n = n^beta, against -x^2/2.

    ``tilt="proxy"`` solves B_n(lam) = a_n x; ``tilt="linear"`` uses lam = a_n x.
    """
    if tilt not in ("proxy", "linear"):
        raise InvalidInputError(f"tilt must be 'proxy' or 'linear', got {tilt!r}")
    if not 0.0 < beta < 0.5:
        raise InvalidInputError(f"beta must lie in (0, 1/2), got {beta!r}")
    rows = []
    target = -0.5 * x * x
    for idx, n in enumerate(n_values):
        m = model.with_n(int(n))
        a_n = float(n) ** beta
        a_n = max(a_n, 1.0)
        lam = a_n * x if tilt == "linear" else None
        pt = mdp_point(m, x, a_n, N, derive_seed(seed, idx), workers, lam)
        gap = abs(pt.value - target) if math.isfinite(pt.value) else math.inf
        rows.append(MdpRow(int(n), pt.a_n, float(x), pt.lambda_used, pt.value, pt.stderr,
                           target, gap, pt.flags))
    return rows


# --- envelope calibration -------------------------------------------------------

@dataclass(frozen=True)
class CalibrationPoint:
    x: float
    n: int
    ratio: float
    stderr: float = 0.0
    delta: float = 0.0
    label: str = ""


def calibrate_envelope_c(points: Sequence[CalibrationPoint], band: float = 2.0,
                         max_rel_stderr: float = MAX_REL_STDERR) -> float:
    """Smallest c with |log ratio| + band * stderr / ratio <= c * shape at every point."""
    c = 0.0
    for p in points:
        if not p.ratio > 0 or p.stderr / p.ratio > max_rel_stderr:
            raise PrecisionError(
                f"unreliable calibration point {p.label or (p.x, p.n)}: ratio={p.ratio}, stderr={p.stderr}"
            )
        need = abs(math.log(p.ratio)) + band * p.stderr / p.ratio
        if need == 0.0:
            continue
        shape = envelope_shape(p.x, p.n, p.delta)
        if shape == 0.0:
            raise PrecisionError(f"point {p.label or (p.x, p.n)} has a zero envelope shape")
        c = max(c, need / shape)
    return c


def calibration_points(rows: Sequence[RatioRow]) -> list[CalibrationPoint]:
    return [CalibrationPoint(r.x, r.n, r.ratio, r.stderr / r.normal_tail, r.delta,
                             f"{r.model},n={r.n},x={r.x!r},{r.side}") for r in rows]


def reference_c() -> float:
    """Recompute :data:`REFERENCE_C` from the Rademacher enumeration grid."""
    from .models import RademacherIID

    grid = ExperimentGrid([RademacherIID(8)], list(range(8, 17)), x_values=[0.5, 1.0, 2.0])
    return calibrate_envelope_c(calibration_points(theorem_ratio_scan(grid, "enumeration")))


__all__ = [
    "ExperimentGrid",
    "KsResult",
    "RatioRow",
    "MdpRow",
    "CalibrationPoint",
    "REFERENCE_C",
    "resolve_lambda",
    "lemma31_check",
    "lemma32_check",
    "lemma33_check",
    "lemma_tables",
    "lemma34_ks",
    "tilted_residuals",
    "theorem_ratio_scan",
    "mdp_scan",
    "calibrate_envelope_c",
    "calibration_points",
    "reference_c",
]
