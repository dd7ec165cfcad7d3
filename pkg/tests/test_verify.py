import math

import numpy as np
import pytest

from martingale_tilt import (
    BernsteinMixture,
    HeteroscedasticRademacher,
    InvalidInputError,
    RademacherIID,
    RangeError,
    TruncatedGaussian,
)
from martingale_tilt.core import PrecisionError
from martingale_tilt.verify import (
    REFERENCE_C,
    CalibrationPoint,
    ExperimentGrid,
    calibrate_envelope_c,
    lemma31_check,
    lemma32_check,
    lemma33_check,
    lemma34_ks,
    mdp_scan,
    reference_c,
    resolve_lambda,
    theorem_ratio_scan,
)

ALL = [RademacherIID(4), HeteroscedasticRademacher(4, 0.01), TruncatedGaussian(4), BernsteinMixture(4)]


class TestGrid:
    def test_tokens(self):
        assert resolve_lambda("sqrt_n/4", 64) == 2.0
        assert resolve_lambda(1.5, 64) == 1.5
        with pytest.raises(InvalidInputError):
            resolve_lambda("n/4", 64)

    def test_validity(self):
        with pytest.raises(RangeError):
            ExperimentGrid([RademacherIID(4)], [4], [3.0])
        with pytest.raises(InvalidInputError):
            ExperimentGrid([], [4], [1.0])

    def test_points(self):
        g = ExperimentGrid(ALL[:2], [4, 16], [0.5, "sqrt_n/4"])
        pts = list(g.lambda_points())
        assert len(pts) == 8
        assert [p[0] for p in pts] == list(range(8))
        assert pts[3][1].n == 16 and pts[3][2] == 1.0


class TestLemma32And33:
    def test_zero_lambda(self):
        g = ExperimentGrid([RademacherIID(4)], [4], [0.0])
        r32, r33 = lemma32_check(g)[0], lemma33_check(g)[0]
        assert r32.lhs == 0.0 and r32.fitted_c == 0.0 and r32.passed
        assert r33.lhs == 0.0 and r33.fitted_c == 0.0

    def test_rademacher_spot(self):
        g = ExperimentGrid([RademacherIID(4)], [4], [1.0])
        r32, r33 = lemma32_check(g)[0], lemma33_check(g)[0]
        assert r32.lhs == pytest.approx(0.075765685479980483, abs=1e-9)
        assert r32.rhs_shape == 0.5
        assert r32.fitted_c == pytest.approx(0.15153137095996097, rel=1e-9)
        assert r33.lhs == pytest.approx(0.019541972166889901, abs=1e-9)
        # lambda^2 delta^2 + lambda^3 / sqrt(n) at delta = 0, n = 4, lambda = 1
        assert r33.rhs_shape == 0.5
        assert r33.fitted_c == pytest.approx(0.039083944333779803, rel=1e-9)

    def test_fitted_c_decreasing_in_n(self):
        g = ExperimentGrid([RademacherIID(4)], [4, 16, 64, 256, 1024], [1.0])
        cs = [r.fitted_c for r in lemma32_check(g)]
        assert all(a >= b for a, b in zip(cs, cs[1:]))

    def test_enumerated_and_sampled_histories(self):
        g = ExperimentGrid([HeteroscedasticRademacher(4, 0.01)], [8, 16], [1.0], seed=3)
        reps = lemma32_check(g)
        assert reps[0].detail["histories"] == "enumerated"
        assert reps[0].detail["count"] == 256
        assert reps[1].detail["histories"] == "sampled"
        assert reps[1].detail["count"] == 10_000

    def test_declared_grid_passes(self):
        g = ExperimentGrid(ALL, [4, 16, 64, 256], [0.1, 0.5, 1.0, 2.0, "sqrt_n/4"], seed=1)
        for rep in lemma32_check(g, c_max=2.0) + lemma33_check(g, c_max=2.0):
            assert rep.passed, rep

    def test_sampled_reproducible(self):
        g = ExperimentGrid([HeteroscedasticRademacher(4, 0.01)], [64], [1.0], seed=5)
        assert lemma32_check(g) == lemma32_check(g)


class TestLemma31:
    def test_all(self):
        reps = lemma31_check([m.with_n(n) for m in ALL for n in (4, 100)])
        assert all(r.holds for r in reps)


class TestLemma34:
    def test_ks_decreasing(self):
        ks = [lemma34_ks(RademacherIID(n), n, 1.0, 50_000, seed=1) for n in (64, 256, 1024)]
        band = ks[0].band
        assert ks[0].ks > ks[1].ks - band
        assert ks[1].ks > ks[2].ks - band

    def test_fit_fields(self):
        r = lemma34_ks(TruncatedGaussian(64), 64, 1.0, 10_000, seed=2)
        assert r.band == pytest.approx(1.36 / 100)
        assert r.bound_shape == pytest.approx(1 / 8 + math.log(64) / 8)
        assert r.fitted_c == pytest.approx(max(r.ks - r.band, 0.0) / r.bound_shape)
        assert r.report(2.0).passed

    def test_null_behaviour(self):
        # continuous model at lambda = 0: distance to Phi is mostly sampling noise
        r = lemma34_ks(TruncatedGaussian(400), 400, 0.0, 20_000, seed=3)
        assert r.ks < r.band + 0.02

    def test_stable_fitted_c(self):
        cs = [lemma34_ks(RademacherIID(n), n, math.sqrt(n) / 2, 100_000, seed=4).fitted_c
              for n in (64, 256, 1024)]
        assert max(cs) <= 2 * min(cs)

    def test_small_N(self):
        with pytest.raises(InvalidInputError):
            lemma34_ks(RademacherIID(16), 16, 1.0, 100)


class TestRatioScan:
    def test_rademacher_lattice_flag(self):
        g = ExperimentGrid([RademacherIID(16)], [16], x_values=[2.0])
        rows = theorem_ratio_scan(g, "enumeration")
        assert len(rows) == 2
        up = rows[0]
        assert up.ratio == pytest.approx(0.46748634253146368, rel=1e-13)
        assert "lattice" in up.flags and up.side == "upper"
        assert rows[1].ratio == up.ratio

    def test_range_flag(self):
        g = ExperimentGrid([RademacherIID(16)], [16], x_values=[3.0])
        rows = theorem_ratio_scan(g, "enumeration", sides=("upper",))
        assert "outside_range" in rows[0].flags

    def test_continuous_trend(self):
        g = ExperimentGrid([TruncatedGaussian(4)], [4, 16, 64], x_values=[1.0], N=200_000, seed=6)
        rows = theorem_ratio_scan(g, "importance", sides=("upper",))
        logs = [abs(math.log(r.ratio)) for r in rows]
        noise = [2 * r.ratio_stderr / r.ratio for r in rows]
        assert logs[0] > logs[2]
        assert all(a + na >= b - nb for a, b, na, nb in zip(logs, logs[1:], noise, noise[1:]))

    def test_naive_shared(self):
        g = ExperimentGrid([TruncatedGaussian(100)], [100], x_values=[0.5, 1.0], N=20_000, seed=2)
        rows = theorem_ratio_scan(g, "naive")
        assert [r.side for r in rows] == ["upper", "lower", "upper", "lower"]
        assert all(0.8 < r.ratio < 1.2 for r in rows)


class TestMdpScan:
    def test_zero(self):
        rows = mdp_scan(TruncatedGaussian(16), 0.0, [100, 400], 0.25, 20_000, seed=1)
        assert all(abs(r.value) < 0.1 for r in rows)

    def test_beta(self):
        for beta in (0.0, 0.5, 0.7):
            with pytest.raises(InvalidInputError):
                mdp_scan(RademacherIID(16), 1.0, [100], beta, 100)

    def test_gap_shrinks(self):
        rows = mdp_scan(RademacherIID(16), 1.0, [100, 1000, 10_000], 0.25, 100_000, seed=2)
        for a, b in zip(rows, rows[1:]):
            assert b.gap < a.gap + 2 * math.hypot(a.stderr, b.stderr)
        assert rows[-1].target == -0.5


class TestCalibration:
    def test_perfect(self):
        pts = [CalibrationPoint(x, 100, 1.0) for x in (0.5, 1.0, 2.0)]
        assert calibrate_envelope_c(pts) == 0.0

    def test_reference_constant(self):
        assert reference_c() == REFERENCE_C

    def test_remove_points(self):
        pts = [CalibrationPoint(0.5, 8, 1.18), CalibrationPoint(1.0, 9, 0.57), CalibrationPoint(2.0, 12, 0.85)]
        full = calibrate_envelope_c(pts)
        for i in range(len(pts)):
            assert calibrate_envelope_c(pts[:i] + pts[i + 1:]) <= full

    def test_band_inflates(self):
        pts = [CalibrationPoint(1.0, 100, 1.05, stderr=0.01)]
        assert calibrate_envelope_c(pts, band=2.0) > calibrate_envelope_c(pts, band=0.0)

    def test_unreliable(self):
        with pytest.raises(PrecisionError):
            calibrate_envelope_c([CalibrationPoint(1.0, 100, 1.0, stderr=0.05)])
        with pytest.raises(PrecisionError):
            calibrate_envelope_c([CalibrationPoint(1.0, 100, 0.0)])
