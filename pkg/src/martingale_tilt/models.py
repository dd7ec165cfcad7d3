"""Martingale-difference model families.

Every model has a conditional law that depends on the history only
through the previous level X_{i-1} (or not at all), so each exposes its
conditional quantities as vectorized functions of that state.  Public
methods take a *history*, the prefix X_0..X_{i-1} of partial sums.
"""

from __future__ import annotations

import dataclasses
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Sequence

import numpy as np
from scipy import integrate, special

from .core import (
    ConditionConstants,
    InvalidInputError,
    RangeError,
    UnsupportedModelError,
    CompensatedSum,
)

DEFAULT_C0 = 4.0
QUAD_EPSABS = 1e-12
# float32 elements per chunk in the truncated-Gaussian batch sampler
_CHUNK_ELEMS = 1 << 22

_LOG2 = math.log(2.0)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix ``seed`` and integer keys into a new 64-bit seed."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1, np.uint64)
    return int(state[0])


class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Backed by the Philox4x64 generator: the 128-bit key is the pair
    (seed, stream_id), so distinct stream ids index independent streams
    and results do not depend on which worker consumes which stream.
    """

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        for name, v in (("seed", seed), ("stream_id", stream_id)):
            if int(v) != v or not 0 <= int(v) < 2 ** 64:
                raise InvalidInputError(f"{name} must be an integer in [0, 2**64), got {v!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def split(self, index: int) -> "RngStream":
        return RngStream(self.seed, derive_seed(self.stream_id, index))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _logcosh(y: Any) -> Any:
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - _LOG2


@dataclass
class TerminalBatch:
    """Per-replicate totals of a batch of simulated paths."""

    x_n: np.ndarray
    log_mgf_sum: np.ndarray
    drift_sum: np.ndarray
    quad_char: np.ndarray

    @property
    def residual(self) -> np.ndarray:
        return self.x_n - self.drift_sum

    def log_weight(self, lam: float) -> np.ndarray:
        return -lam * self.x_n + self.log_mgf_sum


class MartingaleModel(ABC):
    """Shared machinery; concrete models are frozen dataclasses."""

    kind: ClassVar[str]
    iid: ClassVar[bool] = True
    two_point: ClassVar[bool] = False
    lattice: ClassVar[bool] = False
    symmetric: ClassVar[bool] = True

    n: int
    constants: ConditionConstants

    def _init_constants(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(f"n must be a positive integer, got {self.n!r}")
        if self.constants is None:
            object.__setattr__(self, "constants", self.default_constants())
        elif self.constants.n != self.n:
            raise InvalidInputError("constants.n does not match the model's n")

    @abstractmethod
    def default_constants(self) -> ConditionConstants: ...

    # per-state kernels, vectorized over x_prev
    @abstractmethod
    def _log_mgf(self, x_prev: Any, lam: float) -> np.ndarray: ...

    @abstractmethod
    def _drift(self, x_prev: Any, lam: float) -> np.ndarray: ...

    @abstractmethod
    def _variance(self, x_prev: Any) -> np.ndarray: ...

    @abstractmethod
    def _moment(self, x_prev: Any, k: int, absolute: bool) -> np.ndarray: ...

    @abstractmethod
    def _abs_exp_moment(self, x_prev: Any, c: float) -> np.ndarray: ...

    @abstractmethod
    def _sample(self, x_prev: np.ndarray, lam: float, gen: np.random.Generator) -> np.ndarray: ...

    @abstractmethod
    def extremal_histories(self) -> list[list[float]]:
        """Histories on which conditional quantities reach their extremes."""

    @property
    def sqrt_n(self) -> float:
        return math.sqrt(self.n)

    @property
    def name(self) -> str:
        return self.kind

    def config(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    def with_n(self, n: int) -> "MartingaleModel":
        consts = dataclasses.replace(self.constants, n=n)
        return dataclasses.replace(self, n=n, constants=consts)

    def with_constants(self, **changes: float) -> "MartingaleModel":
        return dataclasses.replace(self, constants=dataclasses.replace(self.constants, **changes))

    def mirrored(self) -> "MartingaleModel":
        """Model of the sign-flipped process -X."""
        if not self.symmetric:
            raise UnsupportedModelError(f"{self.name} has no mirrored counterpart")
        return self

    @property
    def max_step(self) -> float:
        return math.inf

    @staticmethod
    def _state(history: Sequence[float] | None) -> float:
        if history is None or len(history) == 0:
            return 0.0
        return float(history[-1])

    def _check_lambda(self, lam: float) -> None:
        bound = self.constants.c0 * self.sqrt_n
        if not abs(lam) <= bound:
            raise RangeError(f"|lambda| = {abs(lam)} exceeds c0*sqrt(n) = {bound}")

    def conditional_mgf(self, history: Sequence[float] | None, lam: float) -> float:
        """E(exp(lam xi_i) | F_{i-1})."""
        return math.exp(self.log_conditional_mgf(history, lam))

    def log_conditional_mgf(self, history: Sequence[float] | None, lam: float) -> float:
        self._check_lambda(lam)
        return float(self._log_mgf(self._state(history), lam))

    def tilted_mean(self, history: Sequence[float] | None, lam: float) -> float:
        self._check_lambda(lam)
        return float(self._drift(self._state(history), lam))

    def conditional_moment(self, history: Sequence[float] | None, k: int,
                           absolute: bool = False) -> float:
        if int(k) != k or k < 1:
            raise InvalidInputError(f"moment order must be an integer >= 1, got {k!r}")
        return float(self._moment(self._state(history), int(k), absolute))

    def conditional_variance(self, history: Sequence[float] | None) -> float:
        return float(self._variance(self._state(history)))

    def abs_exp_moment(self, history: Sequence[float] | None, c: float) -> float:
        """E(exp(c |xi_i|) | F_{i-1})."""
        return float(self._abs_exp_moment(self._state(history), c))

    def conditional_sample(self, history: Sequence[float] | None, rng: RngStream,
                           size: int | None = None) -> Any:
        return self._draw(history, 0.0, rng, size)

    def tilted_conditional_sample(self, history: Sequence[float] | None, lam: float,
                                  rng: RngStream, size: int | None = None) -> Any:
        self._check_lambda(lam)
        return self._draw(history, lam, rng, size)

    def _draw(self, history, lam, rng, size):
        m = 1 if size is None else int(size)
        x_prev = np.full(m, self._state(history))
        out = self._sample(x_prev, lam, rng.generator)
        return float(out[0]) if size is None else out

    def sample_terminal(self, lam: float, size: int, gen: np.random.Generator) -> TerminalBatch:
        """Simulate ``size`` paths under the tilted measure, keeping totals only."""
        x = CompensatedSum(size)
        lm = CompensatedSum(size)
        dr = CompensatedSum(size)
        qc = CompensatedSum(size)
        for _ in range(self.n):
            state = x.value
            lm.add(self._log_mgf(state, lam))
            dr.add(self._drift(state, lam))
            qc.add(self._variance(state))
            x.add(self._sample(state, lam, gen))
        return TerminalBatch(x.value, lm.value, dr.value, qc.value)

    def _iid_batch(self, lam: float, x_n: np.ndarray) -> TerminalBatch:
        size = x_n.shape[0]
        n = self.n
        return TerminalBatch(
            x_n,
            np.full(size, n * float(self._log_mgf(0.0, lam))),
            np.full(size, n * float(self._drift(0.0, lam))),
            np.full(size, n * float(self._variance(0.0))),
        )


class _TwoPoint(MartingaleModel):
    """xi_i = +-sigma(X_{i-1}) / sqrt(n) with a fair sign."""

    two_point = True
    lattice = True

    @abstractmethod
    def _scale(self, x_prev: Any) -> np.ndarray: ...

    def _step(self, x_prev: Any) -> np.ndarray:
        return self._scale(x_prev) / self.sqrt_n

    def _log_mgf(self, x_prev, lam):
        return _logcosh(lam * self._step(x_prev))

    def _drift(self, x_prev, lam):
        s = self._step(x_prev)
        return s * np.tanh(lam * s)

    def _variance(self, x_prev):
        return self._step(x_prev) ** 2

    def _moment(self, x_prev, k, absolute):
        s = self._step(x_prev)
        if not absolute and k % 2 == 1:
            return np.zeros_like(s)
        return s ** k

    def _abs_exp_moment(self, x_prev, c):
        return np.exp(c * self._step(x_prev))

    def _sample(self, x_prev, lam, gen):
        s = self._step(x_prev)
        p_up = special.expit(2.0 * lam * s)
        u = gen.random(np.shape(x_prev))
        return np.where(u < p_up, s, -s)

    def up_probability(self, history: Sequence[float] | None, lam: float) -> float:
        """P_lam(xi_i > 0 | F_{i-1}) = e^y / (e^y + e^-y), y = lam sigma / sqrt(n)."""
        self._check_lambda(lam)
        return float(special.expit(2.0 * lam * self._step(self._state(history))))


@dataclass(frozen=True)
class RademacherIID(_TwoPoint):
    n: int
    constants: ConditionConstants | None = None

    kind: ClassVar[str] = "rademacher"

    def __post_init__(self) -> None:
        self._init_constants()

    def default_constants(self) -> ConditionConstants:
        return ConditionConstants(n=self.n, c0=DEFAULT_C0, c1=math.exp(DEFAULT_C0))

    def _scale(self, x_prev):
        return np.ones(np.shape(x_prev))

    @property
    def max_step(self) -> float:
        return 1.0 / self.sqrt_n

    def extremal_histories(self):
        return [[0.0]]

    def sample_terminal(self, lam, size, gen):
        p_up = float(special.expit(2.0 * lam / self.sqrt_n))
        heads = gen.binomial(self.n, p_up, size)
        return self._iid_batch(lam, (2.0 * heads - self.n) / self.sqrt_n)


@dataclass(frozen=True)
class HeteroscedasticRademacher(_TwoPoint):
    """Fair-sign steps whose variance depends on the current level.

    sigma_i^2 = 1 + a * s(X_{i-1}) with s = +1 on X >= 0 and -1 below
    (reversed when ``mirror`` is set), so |<X>_n - 1| <= a.
    """

    n: int
    amplitude: float = 0.01
    mirror: bool = False
    constants: ConditionConstants | None = None

    kind: ClassVar[str] = "heteroscedastic"
    iid: ClassVar[bool] = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.amplitude < 1.0:
            raise InvalidInputError(f"amplitude must lie in [0, 1), got {self.amplitude!r}")
        self._init_constants()

    def default_constants(self) -> ConditionConstants:
        return ConditionConstants(
            n=self.n,
            c0=DEFAULT_C0,
            c1=math.exp(DEFAULT_C0 * math.sqrt(1.0 + self.amplitude)),
            delta=math.sqrt(self.amplitude),
        )

    @property
    def name(self) -> str:
        suffix = ",mirror" if self.mirror else ""
        return f"heteroscedastic(a={self.amplitude!r}{suffix})"

    def config(self) -> dict:
        return {"kind": self.kind, "n": self.n, "amplitude": self.amplitude}

    def switch(self, x_prev: Any) -> np.ndarray:
        x = np.asarray(x_prev, dtype=float)
        up = x <= 0.0 if self.mirror else x >= 0.0
        return np.where(up, 1.0, -1.0)

    def _scale(self, x_prev):
        return np.sqrt(1.0 + self.amplitude * self.switch(x_prev))

    @property
    def max_step(self) -> float:
        return math.sqrt(1.0 + self.amplitude) / self.sqrt_n

    def mirrored(self) -> "HeteroscedasticRademacher":
        return dataclasses.replace(self, mirror=not self.mirror)

    def extremal_histories(self):
        below = 1.0 / self.sqrt_n if self.mirror else -1.0 / self.sqrt_n
        return [[0.0], [0.0, below]]


@dataclass(frozen=True)
class BernsteinMixture(MartingaleModel):
    """Symmetric scale mixture of Rademacher steps.

    xi_i = eps_i * V_i / sqrt(n), V_i = level j with probability weights[j];
    levels are rescaled so that E V^2 = 1.  With the default levels the
    fourth moment is large enough that the Bernstein condition fails at
    small C while the Cramer condition holds.
    """

    n: int
    weights: tuple = (0.9, 0.1)
    levels: tuple = (0.5, 2.5)
    constants: ConditionConstants | None = None

    kind: ClassVar[str] = "bernstein_mixture"
    lattice: ClassVar[bool] = True

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.levels, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size == 0:
            raise InvalidInputError("weights and levels must be equal-length sequences")
        if np.any(w <= 0) or np.any(v <= 0):
            raise InvalidInputError("weights and levels must be positive")
        object.__setattr__(self, "weights", tuple(float(a) for a in w))
        object.__setattr__(self, "levels", tuple(float(a) for a in v))
        w = w / w.sum()
        object.__setattr__(self, "_w", w)
        object.__setattr__(self, "_v", v / math.sqrt(float(np.dot(w, v * v))))
        self._init_constants()

    def default_constants(self) -> ConditionConstants:
        c1 = float(np.dot(self._w, np.exp(DEFAULT_C0 * self._v)))
        return ConditionConstants(n=self.n, c0=DEFAULT_C0, c1=c1)

    @property
    def name(self) -> str:
        return f"bernstein_mixture(w={list(self.weights)},v={list(self.levels)})"

    def config(self) -> dict:
        return {"kind": self.kind, "n": self.n, "weights": list(self.weights),
                "levels": list(self.levels)}

    @property
    def normalized_levels(self) -> np.ndarray:
        return self._v.copy()

    @property
    def max_step(self) -> float:
        return float(self._v.max()) / self.sqrt_n

    def _y(self, lam):
        return lam * self._v / self.sqrt_n

    def _level_law(self, lam):
        logq = np.log(self._w) + _logcosh(self._y(lam))
        return np.exp(logq - special.logsumexp(logq))

    def _log_mgf(self, x_prev, lam):
        val = special.logsumexp(np.log(self._w) + _logcosh(self._y(lam)))
        return np.full(np.shape(x_prev), val)

    def _drift(self, x_prev, lam):
        q = self._level_law(lam)
        val = float(np.dot(q, self._v / self.sqrt_n * np.tanh(self._y(lam))))
        return np.full(np.shape(x_prev), val)

    def _variance(self, x_prev):
        val = float(np.dot(self._w, self._v ** 2)) / self.n
        return np.full(np.shape(x_prev), val)

    def _moment(self, x_prev, k, absolute):
        if not absolute and k % 2 == 1:
            val = 0.0
        else:
            val = float(np.dot(self._w, (self._v / self.sqrt_n) ** k))
        return np.full(np.shape(x_prev), val)

    def _abs_exp_moment(self, x_prev, c):
        val = float(np.dot(self._w, np.exp(c * self._v / self.sqrt_n)))
        return np.full(np.shape(x_prev), val)

    def _sample(self, x_prev, lam, gen):
        shape = np.shape(x_prev)
        q = self._level_law(lam)
        idx = np.minimum(np.searchsorted(np.cumsum(q), gen.random(shape), side="right"), q.size - 1)
        step = self._v[idx] / self.sqrt_n
        p_up = special.expit(2.0 * lam * step)
        return np.where(gen.random(shape) < p_up, step, -step)

    def extremal_histories(self):
        return [[0.0]]

    def sample_terminal(self, lam, size, gen):
        q = self._level_law(lam)
        p_up = special.expit(2.0 * self._y(lam))
        counts = gen.multinomial(self.n, q, size=size)
        heads = gen.binomial(counts, p_up)
        x_n = ((2.0 * heads - counts) @ self._v) / self.sqrt_n
        return self._iid_batch(lam, x_n)


def _truncated_shifted_normal(t: float, cutoff: float, size: int,
                              gen: np.random.Generator) -> np.ndarray:
    """Draws of N(t, 1) conditioned on [-cutoff, cutoff], by rejection."""
    out = np.empty(size)
    filled = 0
    accept = float(special.ndtr(cutoff - t) - special.ndtr(-cutoff - t))
    while filled < size:
        need = size - filled
        z = t + gen.standard_normal(int(need / max(accept, 1e-3) * 1.1) + 8)
        z = z[np.abs(z) <= cutoff]
        take = min(z.size, need)
        out[filled:filled + take] = z[:take]
        filled += take
    return out


@dataclass(frozen=True)
class TruncatedGaussian(MartingaleModel):
    """xi_i = Z_i / (s sqrt(n)), Z_i standard normal conditioned on |Z| <= T.

    s is the standard deviation of the truncated law, so <X>_n = 1 exactly.
    Under the tilted measure Z_i is N(t, 1) conditioned on [-T, T] with
    t = lam / (s sqrt(n)).
    """

    n: int
    cutoff: float = 3.0
    constants: ConditionConstants | None = None

    kind: ClassVar[str] = "truncated_gaussian"

    def __post_init__(self) -> None:
        if not self.cutoff > 0:
            raise InvalidInputError(f"cutoff must be positive, got {self.cutoff!r}")
        T = float(self.cutoff)
        mass = float(special.ndtr(T) - special.ndtr(-T))
        var = 1.0 - 2.0 * T * _phi(T) / mass
        object.__setattr__(self, "_mass", mass)
        object.__setattr__(self, "_sd", math.sqrt(var))
        self._init_constants()

    def default_constants(self) -> ConditionConstants:
        c1 = self._abs_exp_standard(DEFAULT_C0 / self._sd)
        return ConditionConstants(n=self.n, c0=DEFAULT_C0, c1=c1)

    @property
    def name(self) -> str:
        return f"truncated_gaussian(T={self.cutoff!r})"

    def config(self) -> dict:
        return {"kind": self.kind, "n": self.n, "cutoff": self.cutoff}

    @property
    def sd(self) -> float:
        """Standard deviation of the untilted truncated normal."""
        return self._sd

    @property
    def max_step(self) -> float:
        return self.cutoff / (self._sd * self.sqrt_n)

    def _t(self, lam: float) -> float:
        return lam / (self._sd * self.sqrt_n)

    def _window(self, t: float) -> float:
        T = self.cutoff
        return float(special.ndtr(T - t) - special.ndtr(-T - t))

    def _abs_exp_standard(self, b: float) -> float:
        # E exp(b |Z|) for the truncated standard normal
        T = self.cutoff
        win = float(special.ndtr(T - b) - special.ndtr(-b))
        return 2.0 * math.exp(0.5 * b * b) * win / self._mass

    def _log_mgf(self, x_prev, lam):
        t = self._t(lam)
        val = 0.5 * t * t + math.log(self._window(t) / self._mass)
        return np.full(np.shape(x_prev), val)

    def _drift(self, x_prev, lam):
        t = self._t(lam)
        T = self.cutoff
        mean = t + (_phi(T + t) - _phi(T - t)) / self._window(t)
        return np.full(np.shape(x_prev), mean / (self._sd * self.sqrt_n))

    def _variance(self, x_prev):
        return np.full(np.shape(x_prev), 1.0 / self.n)

    def standard_moment(self, k: int, absolute: bool = False) -> float:
        """E Z^k or E|Z|^k of the (unscaled) truncated normal, by recursion."""
        T = self.cutoff
        pT = _phi(T)
        if absolute:
            # I_k = int_0^T z^k phi(z) dz
            I = [float(special.ndtr(T)) - 0.5, _phi(0.0) - pT]
            for j in range(2, k + 1):
                I.append((j - 1) * I[j - 2] - T ** (j - 1) * pT)
            return 2.0 * I[k] / self._mass
        if k % 2 == 1:
            return 0.0
        m = 1.0
        for j in range(2, k + 1, 2):
            m = (j - 1) * m - 2.0 * T ** (j - 1) * pT / self._mass
        return m

    def _moment(self, x_prev, k, absolute):
        val = self.standard_moment(k, absolute) / (self._sd * self.sqrt_n) ** k
        return np.full(np.shape(x_prev), val)

    def _abs_exp_moment(self, x_prev, c):
        val = self._abs_exp_standard(c / (self._sd * self.sqrt_n))
        return np.full(np.shape(x_prev), val)

    def _sample(self, x_prev, lam, gen):
        z = _truncated_shifted_normal(self._t(lam), self.cutoff, int(np.size(x_prev)), gen)
        return z.reshape(np.shape(x_prev)) / (self._sd * self.sqrt_n)

    def extremal_histories(self):
        return [[0.0]]

    def sample_terminal(self, lam, size, gen):
        x_n = self._standard_sums(self._t(lam), size, gen) / (self._sd * self.sqrt_n)
        return self._iid_batch(lam, x_n)

    def _standard_sums(self, t: float, size: int, gen: np.random.Generator) -> np.ndarray:
        """Sums of n truncated N(t, 1) draws per replicate.

        Proposals are single-precision normals; the few out-of-window
        entries are swapped for exact truncated draws after summation.
        """
        n = self.n
        T = self.cutoff
        hi, lo = T - t, -T - t
        rows = max(1, _CHUNK_ELEMS // n)
        buf = np.empty((min(rows, size), n), dtype=np.float32)
        out = np.empty(size)
        for start in range(0, size, rows):
            r = min(rows, size - start)
            b = buf[:r]
            gen.standard_normal(out=b, dtype=np.float32)
            sums = b.sum(axis=1, dtype=np.float64)
            flat = np.flatnonzero((b > hi) | (b < lo))
            if flat.size:
                ri = flat // n
                removed = np.bincount(ri, weights=b.ravel()[flat].astype(np.float64), minlength=r)
                fresh = _truncated_shifted_normal(t, T, flat.size, gen) - t
                sums += np.bincount(ri, weights=fresh, minlength=r) - removed
            out[start:start + r] = n * t + sums
        return out

    # quadrature counterparts, used as independent cross-checks
    def _quad(self, f) -> float:
        T = self.cutoff
        val, _ = integrate.quad(lambda z: f(z) * _phi(z), -T, T,
                                epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
        return val / self._mass

    def quad_moment(self, k: int, absolute: bool = False) -> float:
        scale = self._sd * self.sqrt_n
        if absolute:
            return self._quad(lambda z: abs(z / scale) ** k)
        return self._quad(lambda z: (z / scale) ** k)

    def quad_mgf(self, lam: float) -> float:
        scale = self._sd * self.sqrt_n
        return self._quad(lambda z: math.exp(lam * z / scale))

    def quad_tilted_mean(self, lam: float) -> float:
        scale = self._sd * self.sqrt_n
        num = self._quad(lambda z: z / scale * math.exp(lam * z / scale))
        return num / self.quad_mgf(lam)

    def quad_abs_exp_moment(self, c: float) -> float:
        scale = self._sd * self.sqrt_n
        return self._quad(lambda z: math.exp(c * abs(z) / scale))


def _phi(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


MODEL_KINDS = {
    RademacherIID.kind: RademacherIID,
    HeteroscedasticRademacher.kind: HeteroscedasticRademacher,
    TruncatedGaussian.kind: TruncatedGaussian,
    BernsteinMixture.kind: BernsteinMixture,
}


def build_model(config: dict, constants: dict | None = None) -> MartingaleModel:
    """Construct a model from a config block such as ``{"kind": "rademacher", "n": 16}``.

    Entries of ``constants`` override the model's declared condition constants.
    """
    cfg = dict(config)
    kind = cfg.pop("kind", None)
    if kind not in MODEL_KINDS:
        raise InvalidInputError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    if "n" not in cfg:
        raise InvalidInputError("model block needs n")
    cls = MODEL_KINDS[kind]
    allowed = {f.name for f in dataclasses.fields(cls)} - {"constants", "mirror"}
    unknown = set(cfg) - allowed
    if unknown:
        raise InvalidInputError(f"unknown parameters for {kind}: {sorted(unknown)}")
    for key in ("weights", "levels"):
        if key in cfg:
            cfg[key] = tuple(cfg[key])
    model = cls(**cfg)
    if constants:
        model = model.with_constants(**constants)
    return model
