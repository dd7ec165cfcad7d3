"""Tail-probability estimators and the normal-approximation envelope.

Monte Carlo replicates are cut into fixed blocks of ``BLOCK_SIZE``; block
``b`` always draws from stream ``(seed, b)`` and block results are merged
in block order, so estimates are identical for any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .core import BoundReport, InvalidInputError, RangeError, UnsupportedModeError
from .models import MartingaleModel, RngStream, TerminalBatch
from .tilting import _check_tilt, enumerate_paths, solve_lambda

BLOCK_SIZE = 8192
UNDERFLOW = 1e-300

ESTIMATORS = ("naive", "importance", "enumeration")


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    replicates: int
    estimator: str
    seed: int | None
    lambda_used: float = 0.0
    log_value: float = -math.inf
    log_stderr: float = -math.inf
    flags: tuple = ()

    def __post_init__(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise InvalidInputError(f"unknown estimator {self.estimator!r}")
        if not 0.0 <= self.value <= 1.0 + 1e-12:
            raise InvalidInputError(f"probability estimate out of range: {self.value}")


def normal_tail(x):
    """1 - Phi(x) via the complementary error function (no cancellation)."""
    out = special.ndtr(np.negative(x))
    return float(out) if np.ndim(out) == 0 else out


def log_normal_tail(x):
    """log(1 - Phi(x)); finite where the tail itself underflows."""
    out = special.log_ndtr(np.negative(x))
    return float(out) if np.ndim(out) == 0 else out


# --- block engine -----------------------------------------------------------

def _blocks(N: int) -> list[tuple[int, int]]:
    if int(N) != N or N < 1:
        raise InvalidInputError(f"replicate count must be a positive integer, got {N!r}")
    N = int(N)
    return [(b, min(BLOCK_SIZE, N - b * BLOCK_SIZE)) for b in range(-(-N // BLOCK_SIZE))]


def map_blocks(fn: Callable, tasks: list, workers: int = 1) -> list:
    """Ordered map, in-process or over a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(int(workers), len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def simulate_block(model: MartingaleModel, lam: float, seed: int, block: int,
                   size: int) -> TerminalBatch:
    return model.sample_terminal(lam, size, RngStream(seed, block).generator)


def _hits(x_n: np.ndarray, queries: Sequence[tuple[float, str]]) -> np.ndarray:
    rows = []
    for x, side in queries:
        rows.append(x_n > x if side == "upper" else x_n < -x)
    return np.array(rows, dtype=bool).reshape(len(queries), x_n.size)


def _tail_block(task) -> np.ndarray:
    model, lam, queries, seed, block, size, weighted = task
    batch = simulate_block(model, lam, seed, block, size)
    hits = _hits(batch.x_n, queries)
    if not weighted:
        return hits.sum(axis=1).astype(float)[:, None]
    lw = batch.log_weight(lam)
    out = np.full((len(queries), 3), -math.inf)
    for j, h in enumerate(hits):
        out[j, 0] = h.sum()
        if out[j, 0] > 0:
            out[j, 1] = special.logsumexp(lw[h])
            out[j, 2] = special.logsumexp(2.0 * lw[h])
    return out


def _run_tails(model, lam, queries, N, seed, workers, weighted) -> np.ndarray:
    tasks = [(model, lam, list(queries), seed, b, size, weighted) for b, size in _blocks(N)]
    parts = map_blocks(_tail_block, tasks, workers)
    total = parts[0].copy()
    for p in parts[1:]:
        if weighted:
            total[:, 0] += p[:, 0]
            total[:, 1:] = np.logaddexp(total[:, 1:], p[:, 1:])
        else:
            total += p
    return total


def _naive_estimate(hits: float, N: int, seed: int, flags=()) -> Estimate:
    p = hits / N
    se = math.sqrt(p * (1.0 - p) / N)
    return Estimate(
        value=p, stderr=se, replicates=N, estimator="naive", seed=seed,
        log_value=math.log(p) if p > 0 else -math.inf,
        log_stderr=math.log(se) if se > 0 else -math.inf,
        flags=tuple(flags) + (("no_hits",) if hits == 0 else ()),
    )


def _weighted_estimate(row: np.ndarray, N: int, seed: int, lam: float) -> Estimate:
    hits, log_s1, log_s2 = (float(v) for v in row)
    if hits == 0:
        return Estimate(0.0, 0.0, N, "importance", seed, lam, flags=("no_hits",))
    log_n = math.log(N)
    log_mean = log_s1 - log_n
    # relative variance of the weighted indicator: N s2 / s1^2 - 1 >= 0
    rel = max(math.expm1(log_s2 + log_n - 2.0 * log_s1), 0.0)
    if N > 1 and rel > 0:
        log_se = log_mean + 0.5 * math.log(rel / (N - 1))
    else:
        log_se = -math.inf
    value = min(math.exp(log_mean), 1.0)
    return Estimate(value, math.exp(log_se), N, "importance", seed, lam,
                    log_value=log_mean, log_stderr=log_se)


def naive_mc_tails(model: MartingaleModel, xs: Sequence[float], N: int, seed: int = 0,
                   workers: int = 1, side: str = "upper") -> list[Estimate]:
    """Plain Monte Carlo for several levels from one set of simulated paths."""
    queries = [(float(x), side) for x in xs]
    counts = _run_tails(model, 0.0, queries, N, seed, workers, weighted=False)
    return [_naive_estimate(float(c[0]), int(N), seed) for c in counts]


def naive_mc_tail(model: MartingaleModel, x: float, N: int, seed: int = 0,
                  workers: int = 1) -> Estimate:
    """Fraction of N plain simulations with X_n > x."""
    return naive_mc_tails(model, [x], N, seed, workers)[0]


def is_tails(model: MartingaleModel, xs: Sequence[float], lam: float, N: int, seed: int = 0,
             workers: int = 1, side: str = "upper") -> list[Estimate]:
    _check_tilt(lam, model.constants)
    queries = [(float(x), side) for x in xs]
    rows = _run_tails(model, lam, queries, N, seed, workers, weighted=True)
    return [_weighted_estimate(r, int(N), seed, lam) for r in rows]


def is_tail(model: MartingaleModel, x: float, lam: float | None, N: int, seed: int = 0,
            workers: int = 1) -> Estimate:
    """Importance sampling under P_lam: mean of 1{X_n > x} dP/dP_lam.

    ``lam=None`` picks the proxy tilt for the level x.
    """
    if lam is None:
        lam = solve_lambda(model, max(float(x), 0.0))
    return is_tails(model, [x], lam, N, seed, workers)[0]


def exact_tail_enumeration(model: MartingaleModel, x: float, side: str = "upper") -> Estimate:
    """Exact P(X_n > x) by summing over all 2^n sign paths (each of mass 2^-n)."""
    paths = enumerate_paths(model, 0.0)
    hits = paths.x_n > x if side == "upper" else paths.x_n < -x
    count = int(np.count_nonzero(hits))
    value = count / float(paths.x_n.size)
    return Estimate(value, 0.0, int(paths.x_n.size), "enumeration", None,
                    log_value=math.log(value) if value > 0 else -math.inf)


def tail_estimate(model: MartingaleModel, x: float, estimator: str = "importance",
                  lam: float | None = None, N: int = 100_000, seed: int = 0,
                  workers: int = 1) -> Estimate:
    if estimator == "enumeration":
        return exact_tail_enumeration(model, x)
    if estimator == "naive":
        return naive_mc_tail(model, x, N, seed, workers)
    if estimator == "importance":
        return is_tail(model, x, lam, N, seed, workers)
    raise UnsupportedModeError(f"unknown estimator {estimator!r}")


def lower_tail(model: MartingaleModel, x: float, estimator: str = "importance",
               lam: float | None = None, N: int = 100_000, seed: int = 0,
               mode: str = "symmetry", workers: int = 1) -> Estimate:
    """P(X_n < -x).

    ``symmetry`` mode estimates the upper tail of the mirrored model -X with
    the requested estimator; ``naive`` mode counts lower-tail hits directly.
    """
    if mode == "symmetry":
        if not model.symmetric:
            raise UnsupportedModeError(f"{model.name} is not symmetric; use mode='naive'")
        return tail_estimate(model.mirrored(), x, estimator, lam, N, seed, workers)
    if mode == "naive":
        return naive_mc_tails(model, [x], N, seed, workers, side="lower")[0]
    raise UnsupportedModeError(f"unknown lower-tail mode {mode!r}")


# --- ratio and envelope ------------------------------------------------------

@dataclass(frozen=True)
class RatioResult:
    x: float
    tail: Estimate
    normal_tail: float
    ratio: float
    ratio_stderr: float
    side: str = "upper"


def ratio_of(estimate: Estimate, x: float, side: str = "upper") -> RatioResult:
    denom = normal_tail(x)
    if not denom > UNDERFLOW:
        raise RangeError(f"normal tail at x={x} is below the {UNDERFLOW} floor")
    return RatioResult(float(x), estimate, denom, estimate.value / denom,
                       estimate.stderr / denom, side)


def ratio(model: MartingaleModel, x: float, estimator: str = "importance",
          lam: float | None = None, N: int = 100_000, seed: int = 0, workers: int = 1,
          side: str = "upper") -> RatioResult:
    """Tail estimate divided by 1 - Phi(x) (upper) or Phi(-x) (lower)."""
    if not normal_tail(x) > UNDERFLOW:
        raise RangeError(f"normal tail at x={x} is below the {UNDERFLOW} floor")
    if side == "upper":
        est = tail_estimate(model, x, estimator, lam, N, seed, workers)
    else:
        est = lower_tail(model, x, estimator, lam, N, seed, workers=workers)
    return ratio_of(est, x, side)


def naive_ratios(model: MartingaleModel, xs: Sequence[float], N: int, seed: int = 0,
                 workers: int = 1, side: str = "upper") -> list[RatioResult]:
    """Ratios at several levels sharing one naive simulation."""
    for x in xs:
        if not normal_tail(x) > UNDERFLOW:
            raise RangeError(f"normal tail at x={x} is below the {UNDERFLOW} floor")
    ests = naive_mc_tails(model, xs, N, seed, workers, side=side)
    return [ratio_of(e, x, side) for e, x in zip(ests, xs)]


@dataclass(frozen=True)
class EnvelopeParams:
    x: float
    n: int
    delta: float = 0.0
    c: float = 1.0
    alpha0: float = 0.5

    def __post_init__(self) -> None:
        if not self.x >= 0 or not self.delta >= 0 or not self.c > 0 or self.n < 1:
            raise InvalidInputError(f"invalid envelope parameters {self}")


def envelope_shape(x: float, n: int, delta: float) -> float:
    """x^3/sqrt(n) + x^2 delta^2 + (1 + x)(log n / sqrt(n) + delta)."""
    rn = math.sqrt(n)
    return x ** 3 / rn + x * x * delta * delta + (1.0 + x) * (math.log(n) / rn + delta)


def envelope(p: EnvelopeParams) -> tuple[float, float]:
    """Multiplicative band (e^-E, e^E) for P(X_n > x) / (1 - Phi(x))."""
    if p.x > p.alpha0 * math.sqrt(p.n) or p.delta > p.alpha0:
        warnings.warn(
            f"envelope evaluated outside x <= alpha0 sqrt(n), delta <= alpha0 "
            f"(x={p.x}, n={p.n}, delta={p.delta}, alpha0={p.alpha0})",
            RuntimeWarning,
            stacklevel=2,
        )
    e = p.c * envelope_shape(p.x, p.n, p.delta)
    return math.exp(-e), math.exp(e)


# --- moderate deviations -----------------------------------------------------

@dataclass(frozen=True)
class MdpPoint:
    x: float
    a_n: float
    value: float
    stderr: float
    lambda_used: float
    estimate: Estimate
    flags: tuple = field(default=())


def mdp_point(model: MartingaleModel, x: float, a_n: float, N: int, seed: int = 0,
              workers: int = 1, lam: float | None = None) -> MdpPoint:
    """(1 / a_n^2) log P(X_n > a_n x), estimated by importance sampling.

    The tilt defaults to the proxy solving B_n(lam) = a_n x; pass ``lam``
    to fix it (e.g. lam = a_n x).
    """
    if not a_n >= 1:
        raise InvalidInputError(f"a_n must be >= 1, got {a_n!r}")
    if not x >= 0:
        raise InvalidInputError(f"x must be >= 0, got {x!r}")
    level = a_n * x
    if lam is None:
        lam = solve_lambda(model, level)
    est = is_tail(model, level, lam, N, seed, workers)
    scale = a_n * a_n
    if est.value == 0.0 and est.log_value == -math.inf:
        return MdpPoint(x, a_n, -math.inf, math.inf, lam, est, ("no_hits",))
    rel = math.exp(est.log_stderr - est.log_value) if est.log_stderr > -math.inf else 0.0
    return MdpPoint(x, a_n, est.log_value / scale, rel / scale, lam, est)


def log_ratio_bound_check(result: RatioResult, n: int, delta: float = 0.0, c: float = 1.0,
                          point_id: str = "") -> BoundReport:
    """|log(tail / normal tail)| against x^3/sqrt(n) + x^2 delta^2 + (1+x)(log n/sqrt(n) + delta)."""
    if not result.ratio > 0:
        raise RangeError(f"log ratio undefined for ratio {result.ratio}")
    lhs = abs(math.log(result.ratio))
    shape = envelope_shape(result.x, n, delta)
    detail = {"x": result.x, "n": n, "delta": delta, "ratio": result.ratio, "side": result.side}
    return BoundReport.build(point_id or f"x={result.x!r},n={n}", lhs, shape, c, detail)
