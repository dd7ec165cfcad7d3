"""Conjugate-measure machinery.

Under P_lam the i-th step has conditional density
exp(lam xi) / E(exp(lam xi) | F_{i-1}) against its original law.  The
likelihood ratio dP/dP_lam over a path is exp(-lam X_n + Psi_n(lam)),
kept in the log domain throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    CompensatedSum,
    ConditionConstants,
    InvalidInputError,
    Path,
    RangeError,
    ResourceError,
    UnsupportedModeError,
    UnsupportedModelError,
    partial_sums,
)
from .models import MartingaleModel, RngStream

BISECTION_TOL = 1e-10
MAX_ENUMERATION_N = 24


@dataclass(frozen=True)
class TiltConfig:
    lam: float
    consts: ConditionConstants

    def __post_init__(self) -> None:
        _check_tilt(self.lam, self.consts)


def _check_tilt(lam: float, consts: ConditionConstants) -> None:
    if not 0.0 <= lam <= consts.lambda_max * (1.0 + 1e-12):
        raise RangeError(
            f"lambda = {lam} outside [0, c0*sqrt(n)/4] = [0, {consts.lambda_max}]"
        )


@dataclass(frozen=True)
class TiltedPath:
    path: Path
    lam: float
    log_weight: float
    drift_sum: float
    residual: float

    @property
    def weight(self) -> float:
        return math.exp(self.log_weight)


def drift(model: MartingaleModel, history: Sequence[float] | None, lam: float) -> float:
    """b_i(lam) = E(xi e^{lam xi} | F) / E(e^{lam xi} | F), the tilted conditional mean."""
    _check_tilt(lam, model.constants)
    return model.tilted_mean(history, lam)


def _prefix_states(model: MartingaleModel, history) -> np.ndarray:
    if history is None:
        if not model.iid:
            raise InvalidInputError(f"{model.name} is history dependent; pass the path")
        return np.zeros(model.n)
    sums = history.partial_sums if isinstance(history, Path) else np.asarray(history, dtype=float)
    if sums.size < model.n:
        raise InvalidInputError(f"history needs at least n = {model.n} partial sums")
    return sums[: model.n]


def _sum_along(values: np.ndarray) -> float:
    acc = CompensatedSum()
    for v in values:
        acc.add(v)
    return float(acc.value)


def B_n(model: MartingaleModel, lam: float, history=None) -> float:
    """Sum of tilted conditional means along the history prefixes X_0..X_{n-1}.

    ``history`` may be a :class:`Path` or the partial sums; it can be omitted
    for i.i.d. models.
    """
    _check_tilt(lam, model.constants)
    states = _prefix_states(model, history)
    if history is None:
        return model.n * float(model._drift(0.0, lam))
    return _sum_along(model._drift(states, lam))


def Psi_n(model: MartingaleModel, lam: float, history=None) -> float:
    """Sum of log E(e^{lam xi_i} | F_{i-1}) along the history."""
    _check_tilt(lam, model.constants)
    states = _prefix_states(model, history)
    if history is None:
        return model.n * float(model._log_mgf(0.0, lam))
    return _sum_along(model._log_mgf(states, lam))


def tilted_path_from_increments(model: MartingaleModel, lam: float,
                                increments: Sequence[float]) -> TiltedPath:
    """Bookkeeping for a given realization: weights, drift and residual."""
    _check_tilt(lam, model.constants)
    xi = np.asarray(increments, dtype=float)
    if xi.size != model.n:
        raise InvalidInputError(f"expected {model.n} increments, got {xi.size}")
    sums = partial_sums(xi)
    states = sums[:-1]
    log_mgf_sum = _sum_along(model._log_mgf(states, lam))
    drift_sum = _sum_along(model._drift(states, lam))
    path = Path.from_increments(model, xi, log_mgf_sum=log_mgf_sum)
    x_n = path.terminal
    return TiltedPath(path, lam, -lam * x_n + log_mgf_sum, drift_sum, x_n - drift_sum)


def simulate_tilted(model: MartingaleModel, cfg: TiltConfig, rng: RngStream) -> TiltedPath:
    """One path under P_lam, drawn step by step."""
    if cfg.consts.n != model.n:
        raise InvalidInputError("TiltConfig constants do not match the model")
    gen = rng.generator
    x = CompensatedSum()
    xi = np.empty(model.n)
    for i in range(model.n):
        state = np.array([float(x.value)])
        xi[i] = model._sample(state, cfg.lam, gen)[0]
        x.add(xi[i])
    return tilted_path_from_increments(model, cfg.lam, xi)


def decompose(tilted: TiltedPath) -> tuple[float, float]:
    """(B_n(lam), Y_n(lam)) with B + Y = X_n."""
    return tilted.drift_sum, tilted.residual


def solve_lambda(model: MartingaleModel, x: float, consts: ConditionConstants | None = None,
                 mode: str = "proxy") -> float:
    """Tilt parameter aimed at the level x.

    ``proxy`` returns min(x, alpha0 sqrt(n)); ``root_find`` solves
    B_n(lam) = x by bisection on [0, c0 sqrt(n) / 4] (i.i.d. models only),
    falling back to the proxy when x is beyond the reach of B_n.
    """
    consts = consts or model.constants
    if not x >= 0:
        raise InvalidInputError(f"x must be >= 0, got {x!r}")
    proxy = min(float(x), consts.alpha0 * math.sqrt(consts.n), consts.lambda_max)
    if mode == "proxy":
        return proxy
    if mode != "root_find":
        raise UnsupportedModeError(f"unknown mode {mode!r}")
    if not model.iid:
        raise UnsupportedModeError("root_find needs an i.i.d. model (path-independent B_n)")

    def f(lam: float) -> float:
        return model.n * float(model._drift(0.0, lam)) - x

    lo, hi = 0.0, consts.lambda_max
    if f(hi) < 0:
        return proxy
    if f(lo) >= 0:
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= BISECTION_TOL:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class PathEnumeration:
    """All 2^n sign paths of a two-point model, with their P and P_lam masses."""

    lam: float
    x_n: np.ndarray
    log_prob: np.ndarray
    log_prob_tilted: np.ndarray
    log_mgf_sum: np.ndarray
    drift_sum: np.ndarray
    quad_char: np.ndarray

    @property
    def log_weight(self) -> np.ndarray:
        return -self.lam * self.x_n + self.log_mgf_sum


def enumerate_paths(model: MartingaleModel, lam: float = 0.0) -> PathEnumeration:
    if not model.two_point:
        raise UnsupportedModelError(f"{model.name} does not have two-point conditional laws")
    n = model.n
    if n > MAX_ENUMERATION_N:
        raise ResourceError(f"enumeration of 2^{n} paths exceeds the n <= {MAX_ENUMERATION_N} limit")
    if not 0.0 <= lam <= model.constants.c0 * model.sqrt_n:
        raise RangeError(f"lambda = {lam} outside the conjugate range")
    x = np.zeros(1)
    lpt = np.zeros(1)
    lm = np.zeros(1)
    dr = np.zeros(1)
    qc = np.zeros(1)
    for _ in range(n):
        step = model._step(x)
        y = lam * step
        lm = lm + model._log_mgf(x, lam)
        dr = dr + step * np.tanh(y)
        qc = qc + step * step
        log_up = -np.logaddexp(0.0, -2.0 * y)
        log_down = -np.logaddexp(0.0, 2.0 * y)
        x = np.concatenate([x + step, x - step])
        lpt = np.concatenate([lpt + log_up, lpt + log_down])
        lm = np.concatenate([lm, lm])
        dr = np.concatenate([dr, dr])
        qc = np.concatenate([qc, qc])
    log_prob = np.full(x.size, -n * math.log(2.0))
    return PathEnumeration(lam, x, log_prob, lpt, lm, dr, qc)


__all__ = [
    "TiltConfig",
    "TiltedPath",
    "PathEnumeration",
    "drift",
    "B_n",
    "Psi_n",
    "simulate_tilted",
    "tilted_path_from_increments",
    "decompose",
    "solve_lambda",
    "enumerate_paths",
]
