import math

import numpy as np
import pytest

from martingale_tilt import (
    BernsteinMixture,
    HeteroscedasticRademacher,
    InvalidInputError,
    RademacherIID,
    RangeError,
    RngStream,
    TruncatedGaussian,
    build_model,
)
from martingale_tilt.models import derive_seed
from martingale_tilt.tilting import drift

MODELS = [
    RademacherIID(16),
    HeteroscedasticRademacher(16, amplitude=0.05),
    TruncatedGaussian(16),
    BernsteinMixture(16),
]
HISTORIES = [None, [0.0, 0.25], [0.0, -0.25]]


class TestRngStream:
    def test_deterministic(self):
        a = RngStream(7, 3).generator.random(5)
        b = RngStream(7, 3).generator.random(5)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 0).generator.random(1000)
        b = RngStream(7, 1).generator.random(1000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.1

    def test_split(self):
        s = RngStream(1, 2)
        assert s.split(5).stream_id == s.split(5).stream_id != s.split(6).stream_id

    @pytest.mark.parametrize("bad", [-1, 2 ** 64, 1.5])
    def test_rejects(self, bad):
        with pytest.raises(InvalidInputError):
            RngStream(bad)

    def test_derive_seed(self):
        assert derive_seed(1, 2) == derive_seed(1, 2) != derive_seed(1, 3)


class TestConditionalMgf:
    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    @pytest.mark.parametrize("h", HISTORIES)
    def test_at_zero(self, m, h):
        assert m.conditional_mgf(h, 0.0) == 1.0

    def test_rademacher_cosh(self):
        assert RademacherIID(4).conditional_mgf(None, 1.0) == pytest.approx(1.1276259652063807, rel=1e-15)

    def test_heteroscedastic_degenerates(self):
        r, h = RademacherIID(9), HeteroscedasticRademacher(9, amplitude=0.0)
        for lam in np.linspace(-3, 3, 13):
            for hist in HISTORIES:
                assert h.conditional_mgf(hist, lam) == r.conditional_mgf(hist, lam)

    def test_range(self):
        m = RademacherIID(4)
        with pytest.raises(RangeError):
            m.conditional_mgf(None, m.constants.c0 * 2.0 + 0.1)

    def test_truncated_gaussian_quadrature(self):
        m = TruncatedGaussian(16)
        for lam in (0.3, 1.0, 2.5, 4.0):
            assert m.conditional_mgf(None, lam) == pytest.approx(m.quad_mgf(lam), rel=1e-12)
            assert m.tilted_mean(None, lam) == pytest.approx(m.quad_tilted_mean(lam), rel=1e-10)

    def test_heteroscedastic_history_dependence(self):
        m = HeteroscedasticRademacher(4, amplitude=0.2)
        up = m.conditional_mgf([0.0, 0.5], 1.0)
        down = m.conditional_mgf([0.0, -0.5], 1.0)
        assert up == pytest.approx(math.cosh(math.sqrt(1.2) / 2), rel=1e-15)
        assert down == pytest.approx(math.cosh(math.sqrt(0.8) / 2), rel=1e-15)


class TestMoments:
    def test_rademacher(self):
        m = RademacherIID(4)
        assert m.conditional_moment(None, 1) == 0.0
        assert m.conditional_moment(None, 3, absolute=True) == 0.125

    def test_truncated_gaussian_variance(self):
        m = TruncatedGaussian(50)
        assert m.conditional_moment(None, 2) == pytest.approx(1 / 50, rel=1e-14)
        assert m.conditional_variance(None) == 1 / 50

    def test_truncated_gaussian_sd(self):
        # mpmath oracle for the standard deviation of N(0,1) truncated to [-3, 3]
        assert TruncatedGaussian(4).sd == pytest.approx(0.98657839255810862, rel=1e-14)

    @pytest.mark.parametrize("k", range(1, 13))
    @pytest.mark.parametrize("absolute", [False, True])
    def test_quadrature_agrees(self, k, absolute):
        m = TruncatedGaussian(9, cutoff=2.5)
        closed = m.conditional_moment(None, k, absolute)
        quad = m.quad_moment(k, absolute)
        assert closed == pytest.approx(quad, rel=1e-9, abs=1e-300)

    def test_invalid_order(self):
        with pytest.raises(InvalidInputError):
            RademacherIID(4).conditional_moment(None, 0)

    def test_mixture_normalized(self):
        m = BernsteinMixture(25)
        assert m.conditional_variance(None) == pytest.approx(1 / 25, rel=1e-14)


class TestSampling:
    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    def test_determinism(self, m):
        a = m.conditional_sample([0.0, 0.1], RngStream(5, 1), size=10)
        b = m.conditional_sample([0.0, 0.1], RngStream(5, 1), size=10)
        assert np.array_equal(a, b)

    def test_rademacher_support(self):
        m = RademacherIID(16)
        draws = m.conditional_sample(None, RngStream(1), size=1000)
        assert set(np.unique(draws)) == {-0.25, 0.25}
        assert isinstance(m.conditional_sample(None, RngStream(1)), float)

    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    def test_clt_mean(self, m):
        draws = m.conditional_sample([0.0, 0.3], RngStream(11, 2), size=1_000_000)
        sd = math.sqrt(m.conditional_variance([0.0, 0.3]))
        assert abs(draws.mean()) <= 4 * sd / 1000

    def test_tilted_probability(self):
        m = RademacherIID(4)
        lam = 2 * math.atanh(0.5)
        assert m.up_probability(None, lam) == pytest.approx(0.75, rel=1e-15)
        draws = m.tilted_conditional_sample(None, lam, RngStream(3), size=200_000)
        assert abs((draws > 0).mean() - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 200_000)

    def test_tilt_zero_matches_plain(self):
        m = TruncatedGaussian(9)
        a = m.conditional_sample(None, RngStream(2), size=100)
        b = m.tilted_conditional_sample(None, 0.0, RngStream(2), size=100)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    def test_tilted_mean_matches_drift(self, m):
        lam = 1.5
        h = [0.0, 0.3]
        draws = m.tilted_conditional_sample(h, lam, RngStream(9), size=1_000_000)
        b = drift(m, h, lam)
        se = draws.std() / 1000
        assert abs(draws.mean() - b) <= 4 * se

    def test_tilted_range(self):
        with pytest.raises(RangeError):
            RademacherIID(4).tilted_conditional_sample(None, 100.0, RngStream(1))

    def test_truncated_support(self):
        m = TruncatedGaussian(4, cutoff=2.0)
        d = m.tilted_conditional_sample(None, 3.0, RngStream(4), size=100_000)
        assert np.abs(d).max() <= m.max_step


class TestTerminalSampling:
    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    def test_moments_untilted(self, m):
        batch = m.sample_terminal(0.0, 200_000, RngStream(1).generator)
        assert abs(batch.x_n.mean()) < 4 * math.sqrt(1.1 / 200_000)
        assert batch.x_n.var() == pytest.approx(1.0, abs=0.03)

    @pytest.mark.parametrize("m", MODELS, ids=lambda m: m.kind)
    def test_tilted_mean(self, m):
        lam = 1.0
        batch = m.sample_terminal(lam, 200_000, RngStream(2).generator)
        assert abs(batch.residual.mean()) < 4 * batch.residual.std() / math.sqrt(200_000)

    def test_truncated_fast_path_matches_step_loop(self):
        m = TruncatedGaussian(20)
        fast = m.sample_terminal(1.0, 100_000, RngStream(3).generator).x_n
        slow = super(TruncatedGaussian, m).sample_terminal(1.0, 100_000, RngStream(4).generator).x_n
        from scipy import stats
        assert stats.ks_2samp(fast, slow).pvalue > 1e-3

    def test_truncated_window_respected(self):
        # every proposal outside [-T, T] is replaced, so the sum of n draws is within n*T
        m = TruncatedGaussian(3, cutoff=0.5)
        s = m._standard_sums(0.0, 50_000, RngStream(5).generator)
        assert np.abs(s).max() <= 3 * 0.5 + 1e-6


class TestMirrorAndBuild:
    def test_mirror_heteroscedastic(self):
        m = HeteroscedasticRademacher(8, amplitude=0.1)
        mm = m.mirrored()
        for x in (-0.5, 0.0, 0.5):
            assert mm.conditional_variance([x]) == m.conditional_variance([-x]) or x == 0.0
        assert mm.mirrored() == m

    def test_build_model(self):
        m = build_model({"kind": "heteroscedastic", "n": 8, "amplitude": 0.04}, {"delta": 0.5})
        assert isinstance(m, HeteroscedasticRademacher)
        assert m.constants.delta == 0.5

    @pytest.mark.parametrize("cfg", [{"kind": "nope", "n": 4}, {"kind": "rademacher"},
                                     {"kind": "rademacher", "n": 4, "cutoff": 1.0}])
    def test_build_rejects(self, cfg):
        with pytest.raises(InvalidInputError):
            build_model(cfg)

    @pytest.mark.parametrize("bad", [dict(amplitude=1.0), dict(amplitude=-0.1)])
    def test_amplitude_range(self, bad):
        with pytest.raises(InvalidInputError):
            HeteroscedasticRademacher(4, **bad)
