"""Tests for the growth constants, Stirling brackets and regime tables."""

import math

import numpy as np
import pytest

from special.functions import LogValue, ModelParams, c_const, kappa, log_gamma_fn
from quadrature.integrator import QuadConfig
from engine.exact import mean_volume, moment_bounds
from asymptotics.regime import (
    CEILING_NOTE,
    ROW_COLUMNS,
    IntensityRule,
    RegimeMode,
    RegimeSpec,
    A_rate,
    B_rate,
    calibrated_moment_bounds,
    decay_base,
    moment_rate_log,
    parameter_row,
    regime_report,
    stirling_brackets,
    variance_rate_log,
    variance_residual,
)

PI = math.pi
E = math.e


def calibrated(a: float, lam: float = 1.0) -> RegimeSpec:
    return RegimeSpec(mode=RegimeMode.PROPORTIONAL, exponent=a,
                      intensity_rule=IntensityRule.CALIBRATED, level=lam)


class TestGrowthConstants:

    def test_fixed_exponent_constant(self):
        assert A_rate(1.0) == pytest.approx(PI / E)
        assert A_rate(3.0) == pytest.approx(PI ** 2 / E)

    def test_proportional_constant(self):
        assert B_rate(1.0) == pytest.approx(8.0 * PI * E)
        assert B_rate(2.0) == pytest.approx(PI * E * 3.0 ** 1.5)
        assert B_rate(1e6) == pytest.approx(2.0 * PI * E, rel=1e-4)

    def test_decay_base(self):
        assert decay_base(1.0) == pytest.approx(16.0 / 27.0)
        assert decay_base(2.0) == pytest.approx(27.0 / 64.0)
        a = np.logspace(-3, 3, 25)
        assert all(0.0 < decay_base(x) < 1.0 for x in a)

    def test_rejects_non_positive_ratio(self):
        with pytest.raises(ValueError):
            decay_base(0.0)
        with pytest.raises(ValueError):
            B_rate(-1.0)


class TestStirlingBrackets:

    @pytest.mark.parametrize('n', [2, 3, 7, 20, 60])
    @pytest.mark.parametrize('r', [0.5, 1.0, 4.0])
    @pytest.mark.parametrize('k', [1, 2, 3])
    def test_brackets_contain_exact_values(self, n, r, k):
        brackets = stirling_brackets(n, r, k)
        log_kappa = kappa(n).log_abs

        scale = math.log(n) + log_kappa + math.log(r) - math.log(2.0) - c_const(n, r).log_abs
        lower, upper = brackets.calc1
        assert lower.log_abs <= scale <= upper.log_abs

        product = log_gamma_fn(k * n / r + 1.0) + k * log_kappa
        lower, upper = brackets.calc2
        assert lower.log_abs <= product <= upper.log_abs

        power = k * (log_gamma_fn(n / r + 1.0) + log_kappa)
        lower, upper = brackets.calc3
        assert upper is None
        assert lower.log_abs <= power


class TestMomentRates:

    @pytest.mark.parametrize('n', [2, 6, 25, 200])
    def test_calibrated_bounds_are_exact(self, n):
        spec = calibrated(0.5, lam=2.0)
        bounds = moment_bounds(spec.params(n), 2)
        lower, upper = moment_rate_log(spec, n, k=2)
        assert bounds.lower.log_abs == pytest.approx(lower, abs=1e-9)
        assert bounds.upper.log_abs == pytest.approx(upper, abs=1e-9)

    def test_calibrated_moment_bounds_first_order(self):
        lower, upper = calibrated_moment_bounds(1.0, 1, 4.0)
        assert float(lower) == pytest.approx(0.25)
        assert float(upper) == pytest.approx(0.25)

    def test_fixed_exponent_residual_stays_bounded(self):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=2.0, level=1.0)
        residuals = []
        for n in (20, 40, 80, 160, 320):
            lower, upper = moment_rate_log(spec, n, k=1)
            assert lower <= upper + 1e-12
            residuals.append(mean_volume(spec.params(n)).log_abs - lower)
        assert max(residuals) - min(residuals) < 3.0

    def test_proportional_residual_stays_bounded(self):
        spec = RegimeSpec(mode=RegimeMode.PROPORTIONAL, exponent=1.0, level=1.0)
        residuals = [moment_bounds(spec.params(n), 2).upper.log_abs - moment_rate_log(spec, n, k=2)[0]
                     for n in (20, 40, 80, 160, 320)]
        assert max(residuals) - min(residuals) < 3.0

    @pytest.mark.parametrize('a', [0.5, 1.0, 2.0])
    def test_proportional_mean_residual_stays_bounded(self, a):
        spec = RegimeSpec(mode=RegimeMode.PROPORTIONAL, exponent=a, level=1.0)
        residuals = []
        for n in (20, 40, 80, 160, 320):
            lower, upper = moment_rate_log(spec, n, k=1)
            assert lower == upper
            residuals.append(mean_volume(spec.params(n)).log_abs - lower)
        assert max(residuals) - min(residuals) < 3.0

    def test_calibrated_fixed_exponent_mean(self):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=3.0,
                          intensity_rule=IntensityRule.CALIBRATED, level=5.0)
        lower, upper = moment_rate_log(spec, 10)
        assert lower == upper == pytest.approx(-math.log(5.0))
        assert mean_volume(spec.params(10)).log_abs == pytest.approx(lower, abs=1e-9)


class TestVarianceRates:

    def test_fixed_exponent_band_width(self):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=2.0, level=1.0)
        lower, upper = variance_rate_log(spec, 10)
        assert upper - lower == pytest.approx(10.0 * math.log(4.0))

    def test_calibrated_fixed_exponent_has_lower_law_only(self):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=1.0,
                          intensity_rule=IntensityRule.CALIBRATED, level=1.0)
        lower, upper = variance_rate_log(spec, 16)
        assert lower == pytest.approx(0.5 * math.log(16))
        assert math.isnan(upper)

    def test_calibrated_proportional_decay(self):
        spec = calibrated(1.0)
        ten, twelve = variance_rate_log(spec, 10)[0], variance_rate_log(spec, 12)[0]
        assert twelve - ten == pytest.approx(math.log(16.0 / 27.0) + 0.5 * math.log(10.0 / 12.0))

    def test_residual(self, fast_quad):
        spec = calibrated(1.0)
        row = parameter_row(spec.params(4), fast_quad)
        lower_res, upper_res = variance_residual(spec, 4, LogValue.from_log(row['log_var']))
        expected = row['log_var'] - variance_rate_log(spec, 4)[0]
        assert lower_res == pytest.approx(expected)
        assert upper_res == pytest.approx(expected)


class TestParameterRow:

    def test_planar_row(self, fast_quad):
        row = parameter_row(ModelParams(n=2, r=2.0, gamma=1.0), fast_quad)
        assert row['mean'] == pytest.approx(4.0 * PI)
        assert row['log_mean'] == pytest.approx(math.log(4.0 * PI))
        assert row['D_nr'] == pytest.approx(8.0 * PI ** 2)
        assert row['var_lower'] <= row['var'] <= row['var_upper']
        assert row['converged'] is True
        assert row['error'] == ''

    def test_overflow_keeps_log_column(self):
        row = parameter_row(ModelParams(n=300, r=0.5, gamma=1.0), with_variance=False)
        assert math.isinf(row['k2_upper'])
        assert math.isfinite(row['log_k2_upper'])
        assert 'var' not in row


class TestRegimeReport:

    def test_small_calibrated_table(self, fast_quad):
        df = regime_report(calibrated(1.0), [4, 2, 3, 3], fast_quad, workers=2)
        assert list(df['n']) == [2, 3, 4]
        assert set(ROW_COLUMNS) <= set(df.columns)
        assert df['converged'].all()
        np.testing.assert_allclose(df['mean'], 1.0, rtol=1e-10)
        np.testing.assert_allclose(df['decay_base'], 16.0 / 27.0)
        np.testing.assert_allclose(df['predicted_ratio_1'],
                                   [(16.0 / 27.0) ** 0.5 * math.sqrt(n / (n + 1.0)) for n in (2, 3, 4)])
        assert math.isnan(df['var_ratio_1'].iloc[-1])
        assert df['var_ratio_1'].iloc[0] == pytest.approx(math.exp(df['log_var'][1] - df['log_var'][0]))

    def test_rows_above_ceiling_are_bounds_only(self):
        df = regime_report(calibrated(1.0), [41])
        row = df.iloc[0]
        assert row['error'] == CEILING_NOTE
        assert not row['converged']
        assert row['mean'] == pytest.approx(1.0)
        assert math.isnan(row['var'])

    def test_constant_intensity_has_no_ratio_columns(self, fast_quad):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=2.0, level=1.0)
        df = regime_report(spec, [2], fast_quad)
        assert 'decay_base' not in df.columns

    @pytest.mark.slow
    def test_calibrated_variance_decays_at_predicted_rate(self):
        df = regime_report(calibrated(1.0), [20, 22], QuadConfig(rel_tol=1e-7))
        assert df['converged'].all()
        ratio = math.exp(df['log_var'].iloc[1] - df['log_var'].iloc[0])
        assert ratio == pytest.approx(df['predicted_ratio_2'].iloc[0], rel=0.1)

    def test_fixed_exponent_variance_increases(self, fast_quad):
        spec = RegimeSpec(mode=RegimeMode.FIXED_R, exponent=1.0, level=1.0)
        df = regime_report(spec, range(2, 9), fast_quad)
        assert df['converged'].all()
        assert np.all(np.diff(df['log_var'].to_numpy()) > 0.0)

    @pytest.mark.slow
    def test_calibrated_variance_scaled_by_decay_is_bounded(self):
        dims = list(range(4, 25, 2))
        df = regime_report(calibrated(1.0), dims, QuadConfig(rel_tol=1e-7))
        assert df['converged'].all()
        np.testing.assert_allclose(df['mean'], 1.0, rtol=1e-12)
        n = df['n'].to_numpy(dtype=float)
        scaled = df['log_var'].to_numpy() + 0.5 * np.log(n) + 0.5 * n * math.log(27.0 / 16.0)
        assert scaled.max() - scaled.min() < math.log(1.5)
