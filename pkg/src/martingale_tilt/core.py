"""Domain types for martingale difference sequences and condition checkers.

The checkers evaluate conditional quantities over the finite set of
extremal histories each model declares, so "almost sure" suprema become
finite maxima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

TOL_REL = 1e-9
K_MAX = 12

CONDITION_NAMES = ("A1", "A2", "A1prime", "Bernstein", "Lemma31")


class MartingaleTiltError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MartingaleTiltError, ValueError):
    pass


class RangeError(MartingaleTiltError, ValueError):
    """A tilt parameter or argument lies outside its validity range."""


class UnsupportedModelError(MartingaleTiltError):
    pass


class UnsupportedModeError(MartingaleTiltError):
    pass


class ResourceError(MartingaleTiltError):
    pass


class PrecisionError(MartingaleTiltError):
    pass


@dataclass(frozen=True)
class ConditionConstants:
    """Constants of the conditional Cramer condition and the variance condition.

    ``alpha0`` and ``c_alpha0`` have no known values; they are calibration
    parameters for the range and the multiplicative tail envelope.
    """

    n: int
    c0: float
    c1: float
    delta: float = 0.0
    alpha0: float = 0.5
    c_alpha0: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(f"n must be a positive integer, got {self.n!r}")
        if not self.c0 > 0:
            raise InvalidInputError(f"c0 must be positive, got {self.c0!r}")
        # a centered variable has E exp(c|xi|) >= 1
        if not self.c1 >= 1:
            raise InvalidInputError(f"c1 must be >= 1, got {self.c1!r}")
        if not self.delta >= 0:
            raise InvalidInputError(f"delta must be >= 0, got {self.delta!r}")
        if not self.alpha0 > 0:
            raise InvalidInputError(f"alpha0 must be positive, got {self.alpha0!r}")
        if not self.c_alpha0 > 0:
            raise InvalidInputError(f"c_alpha0 must be positive, got {self.c_alpha0!r}")

    @property
    def lambda_max(self) -> float:
        """Upper end of the working tilt range, c0 * sqrt(n) / 4."""
        return 0.25 * self.c0 * math.sqrt(self.n)


class CompensatedSum:
    """Neumaier running sum, elementwise over an array of accumulators."""

    __slots__ = ("total", "comp")

    def __init__(self, shape: Any = ()) -> None:
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, x: Any) -> None:
        t = self.total + x
        big = np.abs(self.total) >= np.abs(x)
        self.comp = self.comp + np.where(big, (self.total - t) + x, (x - t) + self.total)
        self.total = t

    @property
    def value(self) -> np.ndarray:
        return self.total + self.comp


def _as_finite_array(values: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} must be finite")
    return arr


def partial_sums(increments: Sequence[float]) -> np.ndarray:
    """Return X_0..X_n with X_0 = 0, accumulated left to right with compensation."""
    xi = _as_finite_array(increments, "increments")
    out = np.empty(xi.size + 1)
    out[0] = 0.0
    total = 0.0
    comp = 0.0
    for k, x in enumerate(xi.tolist(), start=1):
        t = total + x
        if abs(total) >= abs(x):
            comp += (total - t) + x
        else:
            comp += (x - t) + total
        total = t
        out[k] = total + comp
    return out


@dataclass(frozen=True)
class Path:
    """One realized trajectory of the martingale."""

    increments: np.ndarray
    partial_sums: np.ndarray
    quad_char: np.ndarray
    log_mgf_sum: float | None = None

    def __post_init__(self) -> None:
        n = len(self.increments)
        if len(self.partial_sums) != n + 1 or len(self.quad_char) != n + 1:
            raise InvalidInputError("partial_sums and quad_char must have length n + 1")
        if self.partial_sums[0] != 0.0 or self.quad_char[0] != 0.0:
            raise InvalidInputError("paths start at X_0 = 0 and <X>_0 = 0")
        if np.any(np.diff(self.quad_char) < 0):
            raise InvalidInputError("quadratic characteristic must be non-decreasing")

    @property
    def n(self) -> int:
        return len(self.increments)

    @property
    def terminal(self) -> float:
        return float(self.partial_sums[-1])

    @classmethod
    def from_increments(cls, model: Any, increments: Sequence[float],
                        log_mgf_sum: float | None = None) -> "Path":
        xi = _as_finite_array(increments, "increments")
        sums = partial_sums(xi)
        qc = _quad_char_from_sums(model, sums)
        return cls(xi, sums, qc, log_mgf_sum)


def _quad_char_from_sums(model: Any, sums: np.ndarray) -> np.ndarray:
    n = len(sums) - 1
    qc = np.zeros(n + 1)
    acc = CompensatedSum()
    for k in range(1, n + 1):
        try:
            v = model.conditional_variance(sums[:k])
        except (AttributeError, NotImplementedError) as exc:
            raise UnsupportedModelError("model cannot evaluate conditional variances") from exc
        acc.add(v)
        qc[k] = float(acc.value)
    return qc


def quadratic_characteristic(model: Any, path: Path | Sequence[float]) -> np.ndarray:
    """<X>_0..<X>_n along a path: running sum of E(xi_k^2 | F_{k-1}).

    ``path`` is a :class:`Path` or a sequence of increments.
    """
    if isinstance(path, Path):
        sums = path.partial_sums
    else:
        sums = partial_sums(path)
    return _quad_char_from_sums(model, sums)


@dataclass(frozen=True)
class ConditionReport:
    condition_name: str
    measured: float
    bound: float
    holds: bool
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.condition_name not in CONDITION_NAMES:
            raise InvalidInputError(f"unknown condition {self.condition_name!r}")


def _report(name: str, measured: float, bound: float, detail: dict, abs_tol: float = 0.0) -> ConditionReport:
    holds = bool(math.isfinite(measured) and measured <= bound * (1.0 + TOL_REL) + abs_tol)
    return ConditionReport(name, float(measured), float(bound), holds, detail)


def _histories(model: Any) -> list:
    return list(model.extremal_histories())


def check_A1(model: Any, consts: ConditionConstants) -> ConditionReport:
    """Conditional Cramer condition: sup E(exp{c0 sqrt(n) |xi_i|} | F) <= c1."""
    c = consts.c0 * math.sqrt(model.n)
    per_history = [float(model.abs_exp_moment(h, c)) for h in _histories(model)]
    measured = max(per_history)
    if math.isnan(measured):
        measured = math.inf
    return _report("A1", measured, consts.c1, {"per_history": per_history, "c0": consts.c0})


def check_A2(model: Any, consts: ConditionConstants) -> ConditionReport:
    """sup |<X>_n - 1| <= delta^2, from per-step conditional variance bounds."""
    try:
        variances = [float(model.conditional_variance(h)) for h in _histories(model)]
    except (AttributeError, NotImplementedError) as exc:
        raise UnsupportedModelError("model cannot evaluate conditional variances") from exc
    v_min, v_max = min(variances), max(variances)
    n = model.n
    measured = max(abs(n * v_max - 1.0), abs(n * v_min - 1.0))
    # n * v - 1 cancels, leaving an absolute rounding error of order n * eps
    slack = 64 * n * np.finfo(float).eps
    if measured < slack:
        measured = 0.0
    detail = {"quad_char_min": n * v_min, "quad_char_max": n * v_max}
    return _report("A2", measured, consts.delta ** 2, detail, abs_tol=slack)


def check_A1prime(model: Any, epsilon: float, c1: float, k_max: int = K_MAX) -> ConditionReport:
    """E(|xi_i|^k | F) <= c1 k! eps^k for k = 2..k_max."""
    if k_max < 2:
        raise InvalidInputError("k_max must be at least 2")
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be positive")
    per_order = {}
    for k in range(2, k_max + 1):
        m = max(float(model.conditional_moment(h, k, absolute=True)) for h in _histories(model))
        per_order[k] = m / (math.factorial(k) * epsilon ** k)
    return _report("A1prime", max(per_order.values()), c1, {"per_order": per_order})


def check_bernstein(model: Any, C: float, k_max: int = K_MAX) -> ConditionReport:
    """Conditional Bernstein condition with constant C, orders 2..k_max."""
    if k_max < 2:
        raise InvalidInputError("k_max must be at least 2")
    if not C > 0:
        raise InvalidInputError("C must be positive")
    n = model.n
    per_order: dict[int, float] = {}
    for h in _histories(model):
        try:
            var = float(model.conditional_variance(h))
        except (AttributeError, NotImplementedError) as exc:
            raise UnsupportedModelError("model cannot evaluate conditional variances") from exc
        for k in range(2, k_max + 1):
            num = abs(float(model.conditional_moment(h, k, absolute=False)))
            den = 0.5 * math.factorial(k) * (C / math.sqrt(n)) ** (k - 2) * var
            if den == 0.0:
                ratio = 0.0 if num == 0.0 else math.inf
            else:
                ratio = num / den
            per_order[k] = max(per_order.get(k, 0.0), ratio)
    return _report("Bernstein", max(per_order.values()), 1.0, {"per_order": per_order})


def moment_bound_check(model: Any, consts: ConditionConstants, k_max: int = K_MAX) -> ConditionReport:
    """Compare E(|xi_i|^k | F) with k! (c0 sqrt(n))^{-k} c1 for k = 3..k_max.

    Under (A1) every order must pass; a failure points at a bug in the
    model's moments, not at the inequality.
    """
    if k_max < 3:
        raise InvalidInputError("k_max must be at least 3")
    a1 = check_A1(model, consts)
    if not a1.holds:
        raise InvalidInputError(
            f"moment bound needs (A1) at c0={consts.c0}, c1={consts.c1}; measured {a1.measured}"
        )
    scale = consts.c0 * math.sqrt(model.n)
    per_order = {}
    worst = 0.0
    for k in range(3, k_max + 1):
        lhs = max(float(model.conditional_moment(h, k, absolute=True)) for h in _histories(model))
        rhs = math.factorial(k) * scale ** (-k) * consts.c1
        per_order[k] = (lhs, rhs)
        worst = max(worst, lhs / rhs)
    return _report("Lemma31", worst, 1.0, {"per_order": per_order})


@dataclass(frozen=True)
class BoundReport:
    """Measured left side against a bound shape; fitted_c = lhs / rhs_shape."""

    point_id: str
    lhs: float
    rhs_shape: float
    fitted_c: float
    c_max: float
    passed: bool
    detail: dict = field(default_factory=dict)

    @classmethod
    def build(cls, point_id: str, lhs: float, rhs_shape: float, c_max: float,
              detail: dict | None = None) -> "BoundReport":
        lhs = abs(float(lhs))
        rhs_shape = float(rhs_shape)
        if rhs_shape < 0:
            raise InvalidInputError("bound shape must be non-negative")
        if rhs_shape == 0.0:
            fitted = 0.0 if lhs == 0.0 else math.inf
        else:
            fitted = lhs / rhs_shape
        return cls(point_id, lhs, rhs_shape, fitted, float(c_max),
                   bool(fitted <= c_max), dict(detail or {}))
