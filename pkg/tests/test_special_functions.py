"""Tests for log-space values and the closed-form constants."""

import math
import sys

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from quadrature.integrator import QuadConfig, integrate_1d

from special.functions import (
    DomainError,
    LogValue,
    ModelParams,
    b_n2,
    c_const,
    cos_power_tail,
    kappa,
    log_gamma_fn,
    omega,
    sin_cos_moment,
)


class TestLogValue:

    def test_multiplication_and_division(self):
        x = LogValue.from_float(3.0) * 2.0
        assert float(x) == pytest.approx(6.0)
        assert float(x / LogValue.from_float(-4.0)) == pytest.approx(-1.5)

    def test_addition_with_mixed_signs(self):
        x = LogValue.from_float(5.0) + LogValue.from_float(-2.0)
        assert float(x) == pytest.approx(3.0)
        assert (LogValue.from_float(2.0) - 2.0).sign == 0

    def test_zero_is_absorbing(self):
        zero = LogValue.zero()
        assert (zero * LogValue.from_log(800.0)).sign == 0
        assert float(zero + 1.5) == pytest.approx(1.5)

    def test_overflow_is_flagged_not_infinite(self):
        big = LogValue.from_log(1000.0)
        value, overflowed = big.to_float()
        assert overflowed
        assert value == sys.float_info.max
        assert not big.is_representable()
        assert str(big) == 'exp(1000)'

    def test_ordering(self):
        values = [LogValue.from_float(-3.0), LogValue.zero(), LogValue.from_log(900.0),
                  LogValue.from_float(0.5)]
        assert sorted(values) == [values[0], values[1], values[3], values[2]]
        assert LogValue.from_float(2.0) == 2.0

    def test_power_of_negative(self):
        assert float(LogValue.from_float(-2.0) ** 3) == pytest.approx(-8.0)
        with pytest.raises(DomainError):
            LogValue.from_float(-2.0) ** 0.5

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            LogValue.from_float(math.nan)


class TestModelParams:

    def test_exponent(self):
        assert ModelParams(n=3, r=1.5, gamma=2.0).p == pytest.approx(4.0)

    @pytest.mark.parametrize('kwargs', [
        {'n': 1, 'r': 1.0, 'gamma': 1.0},
        {'n': 2, 'r': 0.0, 'gamma': 1.0},
        {'n': 2, 'r': 1.0, 'gamma': -1.0},
        {'n': 2, 'r': math.inf, 'gamma': 1.0},
    ])
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(ValidationError):
            ModelParams(**kwargs)


class TestConstants:

    def test_ball_volumes(self):
        assert float(kappa(2)) == pytest.approx(math.pi)
        assert float(kappa(3)) == pytest.approx(4.0 * math.pi / 3.0)
        assert float(omega(2)) == pytest.approx(2.0 * math.pi)
        assert float(omega(3)) == pytest.approx(4.0 * math.pi)

    def test_directional_moment(self):
        assert float(c_const(2, 1.0)) == pytest.approx(2.0)
        assert float(c_const(2, 2.0)) == pytest.approx(math.pi / 2.0)
        assert float(c_const(3, 1.0)) == pytest.approx(math.pi)

    @pytest.mark.parametrize('r', [0.5, 1.0, 1.7, 2.0, 5.0, 6.0, 17.0, 100.0])
    def test_directional_moment_matches_circle_integral(self, r):
        direct, _ = quad(lambda v: math.cos(v) ** r, -math.pi / 2, math.pi / 2, epsabs=0.0, epsrel=1e-12)
        assert float(c_const(2, r)) == pytest.approx(direct, rel=1e-10)

    @pytest.mark.parametrize('k', range(1, 51))
    def test_sphere_area_formula(self, k):
        expected = math.log(2.0) + 0.5 * k * math.log(math.pi) - math.lgamma(0.5 * k)
        assert omega(k).log_abs == pytest.approx(expected, rel=1e-13, abs=1e-13)
        assert omega(k).log_abs == pytest.approx(kappa(k).log_abs + math.log(k), abs=1e-13)

    def test_small_cases(self):
        assert float(kappa(0)) == pytest.approx(1.0)
        assert float(omega(1)) == pytest.approx(2.0)
        assert float(b_n2(4)) == pytest.approx(2.0 * math.pi ** 2)
        assert log_gamma_fn(0.5) == pytest.approx(0.5 * math.log(math.pi))

    @pytest.mark.parametrize('n', range(2, 21))
    def test_sine_power_identity(self, n):
        # n^2 kappa_n^2 = 4 pi b_n2 * integral of sin^(n-2) over [0, pi]
        sine = integrate_1d(lambda phi: np.sin(phi) ** (n - 2), 0.0, math.pi,
                            QuadConfig(rel_tol=1e-12), endpoints=(True, True))
        lhs = 2.0 * (math.log(n) + kappa(n).log_abs)
        rhs = math.log(4.0 * math.pi) + b_n2(n).log_abs + math.log(sine.estimate)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_second_moment_constant(self):
        assert float(b_n2(2)) == pytest.approx(1.0)
        assert float(b_n2(3)) == pytest.approx(2.0 * math.pi)

    def test_sin_cos_moment(self):
        assert float(sin_cos_moment(0, 0)) == pytest.approx(math.pi / 2.0)
        assert float(sin_cos_moment(1, 0)) == pytest.approx(1.0)
        assert float(sin_cos_moment(2, 2)) == pytest.approx(math.pi / 16.0)

    @pytest.mark.parametrize('alpha', [0, 1, 2, 5, 10])
    @pytest.mark.parametrize('beta', [0, 1, 2, 5, 10])
    def test_sin_cos_moment_matches_quadrature(self, alpha, beta):
        direct = integrate_1d(lambda x: np.sin(x) ** alpha * np.cos(x) ** beta, 0.0, math.pi / 2,
                              QuadConfig(rel_tol=1e-12))
        assert float(sin_cos_moment(alpha, beta)) == pytest.approx(direct.estimate, rel=1e-10)

    def test_log_gamma_domain(self):
        assert log_gamma_fn(5.0) == pytest.approx(math.log(24.0))
        with pytest.raises(DomainError):
            log_gamma_fn(0.0)
        with pytest.raises(DomainError):
            log_gamma_fn(math.inf)


class TestCosPowerTail:

    def test_fixed_points(self):
        for r in (0.5, 1.0, 3.0, 40.0):
            assert cos_power_tail(0.0, r) == pytest.approx(0.5)
            assert cos_power_tail(math.pi / 2, r) == pytest.approx(0.0, abs=1e-15)
            assert cos_power_tail(-math.pi / 2, r) == pytest.approx(1.0)

    def test_closed_forms(self):
        v = np.linspace(-1.5, 1.5, 31)
        np.testing.assert_allclose(cos_power_tail(v, 1.0), 0.5 * (1.0 - np.sin(v)), atol=1e-12)
        expected = (math.pi / 2 - v - 0.5 * np.sin(2.0 * v)) / math.pi
        np.testing.assert_allclose(cos_power_tail(v, 2.0), expected, atol=1e-12)

    def test_reflection(self):
        v = np.linspace(0.0, 1.5, 16)
        np.testing.assert_allclose(cos_power_tail(-v, 3.3), 1.0 - cos_power_tail(v, 3.3), atol=1e-15)

    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            cos_power_tail(2.0, 1.0)
        with pytest.raises(DomainError):
            cos_power_tail(0.1, 0.0)

    @pytest.mark.parametrize('r', [0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 7.0, 15.0, 40.0, 100.0])
    def test_beta_route_matches_quadrature(self, r):
        v = np.linspace(-1.55, 1.55, 10)
        cfg = QuadConfig(rel_tol=1e-12, abs_tol=1e-15)
        norm = float(c_const(2, r))
        direct = [integrate_1d(lambda x: np.maximum(np.cos(x), 0.0) ** r, vi, math.pi / 2, cfg,
                               endpoints=(False, True)).estimate / norm for vi in v]
        np.testing.assert_allclose(cos_power_tail(v, r), direct, rtol=0.0, atol=1e-9)

    @pytest.mark.parametrize('r', [0.3, 1.0, 4.0, 100.0])
    def test_complementary_tails(self, r):
        v = np.linspace(-1.55, 1.55, 10)
        np.testing.assert_allclose(cos_power_tail(v, r) + cos_power_tail(-v, r), 1.0, atol=1e-10)
