import math
import warnings

import mpmath
import numpy as np
import pytest

from martingale_tilt import (
    EnvelopeParams,
    Estimate,
    HeteroscedasticRademacher,
    InvalidInputError,
    RademacherIID,
    RangeError,
    TruncatedGaussian,
    envelope,
    exact_tail_enumeration,
    is_tail,
    lower_tail,
    mdp_point,
    naive_mc_tail,
    normal_tail,
    ratio,
)
from martingale_tilt.core import ResourceError, UnsupportedModeError, UnsupportedModelError
from martingale_tilt.estimators import (
    BLOCK_SIZE,
    envelope_shape,
    is_tails,
    log_normal_tail,
    log_ratio_bound_check,
    naive_mc_tails,
    naive_ratios,
    ratio_of,
)

EXACT_16_2 = 697 / 65536


def mp_tail(x):
    mpmath.mp.dps = 60
    return mpmath.ncdf(-mpmath.mpf(x))


class TestNormalTail:
    def test_values(self):
        assert normal_tail(0.0) == 0.5
        assert normal_tail(1.0) == pytest.approx(0.15865525393, abs=1e-11)

    @pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
    def test_absolute_budget(self, x):
        assert abs(normal_tail(x) - float(mp_tail(x))) <= 1e-14

    @pytest.mark.parametrize("x", [8.5, 10, 15, 20, 25, 30, 35, 37])
    def test_relative_budget(self, x):
        ref = mp_tail(x)
        assert abs((normal_tail(x) - ref) / ref) <= 1e-12

    def test_symmetry(self):
        for x in np.linspace(-6, 6, 25):
            assert normal_tail(-x) + normal_tail(x) == pytest.approx(1.0, abs=1e-15)

    def test_mills_ratio(self):
        # x (1 - Phi(x)) / phi(x) = 1 - 1/x^2 + 3/x^4 - 15/x^6 + ...
        x = 30.0
        mills = normal_tail(x) * math.sqrt(2 * math.pi) * x / math.exp(-x * x / 2)
        series = 1 - x ** -2 + 3 * x ** -4 - 15 * x ** -6 + 105 * x ** -8
        assert mills == pytest.approx(series, rel=1e-10)
        assert abs(mills - 1.0) <= 1.0 / x ** 2

    def test_log_tail_beyond_underflow(self):
        ref = float(mpmath.log(mp_tail(40)))
        assert log_normal_tail(40.0) == pytest.approx(ref, rel=1e-12)

    def test_vectorized_monotone(self):
        v = normal_tail(np.linspace(-10, 30, 400))
        assert np.all(np.diff(v) <= 0)


class TestEnumeration:
    def test_small(self):
        assert exact_tail_enumeration(RademacherIID(1), 0.0).value == 0.5
        assert exact_tail_enumeration(RademacherIID(4), 1.0).value == 0.0625

    def test_sixteen(self):
        e = exact_tail_enumeration(RademacherIID(16), 2.0)
        assert e.value == EXACT_16_2
        assert e.stderr == 0.0 and e.estimator == "enumeration"

    def test_limits(self):
        with pytest.raises(ResourceError):
            exact_tail_enumeration(RademacherIID(30), 1.0)
        with pytest.raises(UnsupportedModelError):
            exact_tail_enumeration(TruncatedGaussian(4), 1.0)


class TestNaive:
    def test_sure_and_impossible(self):
        m = RademacherIID(16)
        sure = naive_mc_tail(m, -m.n * m.max_step - 1, 1000, seed=1)
        assert sure.value == 1.0 and sure.stderr == 0.0
        assert naive_mc_tail(m, m.n * m.max_step, 1000, seed=1).value == 0.0

    def test_against_enumeration(self):
        e = naive_mc_tail(RademacherIID(16), 2.0, 1_000_000, seed=4)
        assert abs(e.value - EXACT_16_2) <= 4 * e.stderr
        assert e.stderr == pytest.approx(math.sqrt(e.value * (1 - e.value) / 1_000_000))

    def test_shared_levels(self):
        m = TruncatedGaussian(50)
        many = naive_mc_tails(m, [0.5, 1.0], 20_000, seed=3)
        one = naive_mc_tail(m, 1.0, 20_000, seed=3)
        assert many[1] == one
        assert many[0].value >= many[1].value


class TestImportance:
    def test_against_enumeration(self):
        m = RademacherIID(16)
        e = is_tail(m, 2.0, 2.0, 100_000, seed=5)
        n = naive_mc_tail(m, 2.0, 100_000, seed=5)
        assert abs(e.value - EXACT_16_2) <= 4 * e.stderr
        assert e.stderr < n.stderr
        assert e.lambda_used == 2.0
        assert e.log_value == pytest.approx(math.log(e.value), rel=1e-12)

    def test_zero_tilt_is_naive(self):
        m = RademacherIID(16)
        e = is_tail(m, 1.0, 0.0, 50_000, seed=2)
        n = naive_mc_tail(m, 1.0, 50_000, seed=2)
        assert e.value == pytest.approx(n.value, rel=1e-12)

    def test_heteroscedastic_against_enumeration(self):
        m = HeteroscedasticRademacher(16, 0.05)
        exact = exact_tail_enumeration(m, 2.0).value
        e = is_tail(m, 2.0, 2.0, 50_000, seed=8)
        assert abs(e.value - exact) <= 4 * e.stderr

    def test_range(self):
        with pytest.raises(RangeError):
            is_tail(RademacherIID(16), 2.0, 100.0, 1000)

    def test_deep_tail_log_domain(self):
        m = RademacherIID(10_000)
        e = is_tail(m, 10.0, 10.0, 20_000, seed=1)
        assert -60 < e.log_value < -45
        assert e.value == pytest.approx(math.exp(e.log_value), rel=1e-12)

    def test_block_layout_independent_of_workers(self):
        m = RademacherIID(64)
        N = 2 * BLOCK_SIZE + 17
        a = is_tails(m, [1.0, 2.0], 1.5, N, seed=9, workers=1)
        b = is_tails(m, [1.0, 2.0], 1.5, N, seed=9, workers=3)
        assert a == b


class TestLowerTail:
    def test_enumeration_symmetry(self):
        m = RademacherIID(16)
        e = lower_tail(m, 2.0, estimator="enumeration")
        assert e.value == EXACT_16_2

    def test_mirror_equals_upper(self):
        m = RademacherIID(16)
        lo = lower_tail(m, 2.0, "importance", 2.0, 20_000, seed=3)
        up = is_tail(m, 2.0, 2.0, 20_000, seed=3)
        assert lo == up

    def test_heteroscedastic_mirror_exact(self):
        m = HeteroscedasticRademacher(12, 0.2)
        paths_lower = exact_tail_enumeration(m, 1.0, side="lower").value
        assert lower_tail(m, 1.0, "enumeration").value == paths_lower

    def test_clt_band(self):
        e = lower_tail(TruncatedGaussian(16), 0.0, "naive", N=100_000, seed=1)
        assert 0.4 <= e.value <= 0.6
        e2 = lower_tail(TruncatedGaussian(16), 0.0, N=100_000, seed=1, mode="naive")
        assert 0.4 <= e2.value <= 0.6

    def test_asymmetric(self):
        class Skewed(RademacherIID):
            symmetric = False

        with pytest.raises(UnsupportedModeError):
            lower_tail(Skewed(4), 1.0)


class TestEstimate:
    def test_bounds(self):
        with pytest.raises(InvalidInputError):
            Estimate(1.5, 0.0, 1, "naive", 0)
        with pytest.raises(InvalidInputError):
            Estimate(0.5, 0.0, 1, "magic", 0)


class TestEnvelope:
    def test_trivial(self):
        assert envelope(EnvelopeParams(0.0, 1, 0.0)) == (1.0, 1.0)

    def test_value(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            lo, hi = envelope(EnvelopeParams(1.0, 100, 0.1, 1.0))
        assert math.log(hi) == pytest.approx(1.2310340371976183, rel=1e-14)
        assert hi == pytest.approx(3.4247690445680181, rel=1e-13)

    def test_log_symmetric(self):
        for x, n, d, c in [(0.3, 10, 0.0, 1.0), (2.0, 1000, 0.2, 0.4), (5.0, 50, 0.0, 2.0)]:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lo, hi = envelope(EnvelopeParams(x, n, d, c))
            assert lo <= 1.0 <= hi
            assert lo * hi == pytest.approx(1.0, rel=1e-15)

    def test_monotone(self):
        base = envelope_shape(1.0, 64, 0.1)
        assert envelope_shape(1.5, 64, 0.1) > base
        assert envelope_shape(1.0, 64, 0.2) > base
        assert envelope_shape(1.0, 128, 0.1) < base

    def test_warning(self):
        with pytest.warns(RuntimeWarning):
            envelope(EnvelopeParams(10.0, 16, 0.0))

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            EnvelopeParams(-1.0, 16)


class TestRatio:
    def test_lattice_atom(self):
        r = ratio(RademacherIID(16), 0.0, estimator="enumeration")
        assert r.tail.value == (65536 - 12870) / 2 / 65536
        assert r.ratio == pytest.approx(0.803619384765625, rel=1e-15)

    def test_sixteen(self):
        r = ratio(RademacherIID(16), 2.0, estimator="enumeration")
        assert r.ratio == pytest.approx(0.46748634253146368, rel=1e-13)

    def test_stderr_propagation(self):
        r = ratio(RademacherIID(16), 1.0, "importance", 1.0, 20_000, seed=1)
        assert r.ratio_stderr == r.tail.stderr / normal_tail(1.0)

    def test_underflow(self):
        with pytest.raises(RangeError):
            ratio(RademacherIID(16), 40.0, "enumeration")

    def test_naive_ratios_and_bound(self):
        rs = naive_ratios(TruncatedGaussian(100), [0.5, 1.0], 50_000, seed=2)
        assert [r.x for r in rs] == [0.5, 1.0]
        rep = log_ratio_bound_check(rs[1], 100, 0.0, c=1.0)
        assert rep.passed
        assert rep.lhs == pytest.approx(abs(math.log(rs[1].ratio)))

    def test_ratio_of_lower(self):
        e = exact_tail_enumeration(RademacherIID(16), 2.0, side="lower")
        assert ratio_of(e, 2.0, "lower").side == "lower"


class TestMdpPoint:
    def test_enumeration_value(self):
        # with a_n = 2, (1/4) log P(X_16 > 2); IS estimate against the exact value
        pt = mdp_point(RademacherIID(16), 1.0, 2.0, 200_000, seed=1)
        exact = math.log(EXACT_16_2) / 4
        assert exact == pytest.approx(-1.1358923695496503, rel=1e-14)
        assert abs(pt.value - exact) <= 4 * pt.stderr

    def test_zero(self):
        pt = mdp_point(TruncatedGaussian(400), 0.0, 4.0, 20_000, seed=1)
        assert abs(pt.value - math.log(0.5) / 16) < 0.01

    def test_no_hits(self):
        m = RademacherIID(4)
        pt = mdp_point(m, 3.0, 1.0, 100, seed=1)
        assert pt.value == -math.inf and "no_hits" in pt.flags

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            mdp_point(RademacherIID(4), 1.0, 0.5, 100)
