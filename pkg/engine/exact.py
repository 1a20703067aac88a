"""
Exact Engine Module
Closed-form moments, the second-moment/variance double integrals and the variance sandwich
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from special.functions import (
    DomainError,
    LogValue,
    ModelParams,
    OverflowFlagError,
    ZeroCellError,
    b_n2,
    c_const,
    cos_power_tail,
    kappa,
    log_gamma_fn,
    sin_cos_moment,
)
from quadrature.integrator import QuadConfig, QuadResult, integrate_2d_iterated

logger = logging.getLogger(__name__)

MOMENT_CONFIG = QuadConfig(rel_tol=1e-9)
SWEEP_CONFIG = QuadConfig(rel_tol=1e-7)
# above this p*ln(B/A) the expm1 form gains nothing over direct subtraction
EXPM1_SWITCH = 30.0
T_RANGE = (0.0, 1.0)
PHI_RANGE = (0.0, math.pi)
GRADED = (True, True)


class NegativeVarianceError(ZeroCellError):
    """The variance integral came out negative beyond its error estimate"""


@dataclass(frozen=True)
class MomentBounds:
    """Lower/upper bounds for E[V^k]; exact is set only for k = 1"""
    k: int
    lower: LogValue
    upper: LogValue
    exact: Optional[LogValue] = None


@dataclass(frozen=True)
class VarianceReport:
    """Variance of the zero-cell volume together with the quantities that bound it"""
    params: ModelParams
    second_moment: LogValue
    mean: LogValue
    variance: LogValue
    quad_error: float
    E_nr: float
    D_nr: LogValue
    thm310_lower: LogValue
    thm310_upper: LogValue
    converged: bool = True

    @property
    def abs_error(self) -> LogValue:
        """Absolute error estimate of the variance"""
        return self.variance * self.quad_error


def _scale_log(n: int, r: float, gamma: float) -> float:
    """ln(n kappa_n r / (2 gamma c(n, r)))"""
    return (math.log(n) + kappa(n).log_abs + math.log(r)
            - math.log(2.0 * gamma) - c_const(n, r).log_abs)


def _sine_power_integral(n: int) -> LogValue:
    """Integral of sin^(n-2) over [0, pi], equal to c(2, n-2) for n > 2"""
    return sin_cos_moment(n - 2, 0) * 2.0


def _variance_prefactor(p: ModelParams) -> LogValue:
    """(8 pi b_n2 / r) Gamma(2n/r) (n kappa_n r / (2 gamma c(n,r)))^(2n/r)"""
    return (b_n2(p.n) * (8.0 * math.pi / p.r)
            * LogValue.from_log(log_gamma_fn(p.p) + p.p * _scale_log(p.n, p.r, p.gamma)))


def alpha_fn(t, phi):
    """
    Angle alpha(t, phi) = arctan((t - cos phi) / sin phi)

    Args:
        t: Scalar or array in [0, 1]
        phi: Scalar or array in (0, pi)

    Returns:
        Values in (-pi/2, pi/2), increasing in t
    """
    phi = np.asarray(phi, dtype=float)
    sin_phi = np.sin(phi)
    if np.any(phi <= 0.0) or np.any(phi >= math.pi) or np.any(sin_phi <= 0.0):
        raise DomainError("alpha_fn requires phi in the open interval (0, pi)")
    result = np.arctan((np.asarray(t, dtype=float) - np.cos(phi)) / sin_phi)
    return float(result) if result.ndim == 0 else result


def gap_fn(t, phi, r: float):
    """
    1 + t^r - F_r(t, phi), written as t^r M(alpha, r) + M(phi - alpha, r)

    Nonnegative by construction, so it is the cancellation-free kernel of
    both the variance integrand and E(n, r).
    """
    t = np.asarray(t, dtype=float)
    alpha = np.asarray(alpha_fn(t, phi))
    result = t ** r * cos_power_tail(alpha, r) + cos_power_tail(phi - alpha, r)
    return float(result) if np.ndim(result) == 0 else result


def F_fn(t, phi, r: float):
    """
    Normalised hyperplane measure F_r(t, phi) of two segments from the origin

    Args:
        t: Length ratio in [0, 1] (scalar or array)
        phi: Angle between the segments in (0, pi)
        r: Distance exponent

    Returns:
        t^r (1 - M(alpha, r)) + M(alpha - phi, r), which lies in [1/2, t^r + 1]
    """
    t = np.asarray(t, dtype=float)
    alpha = np.asarray(alpha_fn(t, phi))
    result = t ** r * (1.0 - cos_power_tail(alpha, r)) + cos_power_tail(alpha - phi, r)
    return float(result) if np.ndim(result) == 0 else result


def mean_volume(p: ModelParams) -> LogValue:
    """
    Exact mean volume of the zero cell

    Args:
        p: Model parameters

    Returns:
        Gamma(n/r + 1) kappa_n (n kappa_n r / (2 gamma c(n,r)))^(n/r)
    """
    ratio = p.n / p.r
    return kappa(p.n) * LogValue.from_log(
        log_gamma_fn(ratio + 1.0) + ratio * _scale_log(p.n, p.r, p.gamma))


def moment_bounds(p: ModelParams, k: int) -> MomentBounds:
    """
    Two-sided bounds for E[V^k]; both coincide with the exact mean at k = 1

    Args:
        p: Model parameters
        k: Moment order (>= 1)

    Returns:
        MomentBounds with Gamma(n/r+1)^k and Gamma(kn/r+1) as the respective
        leading factors of the lower and upper bound
    """
    if k < 1:
        raise DomainError(f"moment_bounds requires k >= 1, got {k}")
    if k == 1:
        exact = mean_volume(p)
        return MomentBounds(k=1, lower=exact, upper=exact, exact=exact)
    ratio = p.n / p.r
    common = kappa(p.n) ** k * LogValue.from_log(k * ratio * _scale_log(p.n, p.r, p.gamma))
    lower = common * LogValue.from_log(k * log_gamma_fn(ratio + 1.0))
    upper = common * LogValue.from_log(log_gamma_fn(k * ratio + 1.0))
    return MomentBounds(k=k, lower=lower, upper=upper)


def _second_moment_kernel(n: int, r: float, power: float):
    def kernel(t, phi):
        log_f = np.log(F_fn(t, phi, r))
        return np.exp(-power * log_f) * t ** (n - 1) * np.sin(phi) ** (n - 2)
    return kernel


def _variance_kernel(n: int, r: float, power: float):
    def kernel(t, phi):
        gap = gap_fn(t, phi, r)
        upper = 1.0 + t ** r
        log_upper = np.log(upper)
        # power * ln(B / A) with A = B - gap
        exponent = -power * np.log1p(-gap / upper)
        with np.errstate(over='ignore'):
            stable = np.exp(-power * log_upper) * np.expm1(exponent)
            direct = np.exp(-power * np.log(upper - gap)) - np.exp(-power * log_upper)
        diff = np.where(exponent > EXPM1_SWITCH, direct, stable)
        return diff * t ** (n - 1) * np.sin(phi) ** (n - 2)
    return kernel


def _gap_kernel(n: int, r: float, definition: bool = False):
    def kernel(t, phi):
        if definition:
            gap = 1.0 + t ** r - F_fn(t, phi, r)
        else:
            gap = gap_fn(t, phi, r)
        return gap * t ** (n - 1) * np.sin(phi) ** (n - 2)
    return kernel


def _scaled(result: QuadResult, factor: LogValue) -> QuadResult:
    error = LogValue.from_float(result.abs_error_estimate) * factor
    return QuadResult(
        value=result.value * factor,
        abs_error_estimate=float(error),
        evaluations=result.evaluations,
        converged=result.converged,
    )


def second_moment(p: ModelParams, cfg: Optional[QuadConfig] = None) -> QuadResult:
    """
    Second moment E[V^2] from the double-integral formula

    Args:
        p: Model parameters
        cfg: Quadrature configuration (defaults to rel_tol 1e-9)

    Returns:
        QuadResult whose value carries the log-space prefactor
    """
    cfg = cfg or MOMENT_CONFIG
    integral = integrate_2d_iterated(
        _second_moment_kernel(p.n, p.r, p.p), T_RANGE, PHI_RANGE, cfg,
        inner_endpoints=GRADED, outer_endpoints=GRADED)
    logger.debug("Second-moment integral for %s: %.12g (+/- %.3g)",
                 p, integral.estimate, integral.abs_error_estimate)
    return _scaled(integral, _variance_prefactor(p))


def E_factor(n: int, r: float, cfg: Optional[QuadConfig] = None,
             definition: bool = False) -> QuadResult:
    """
    Auxiliary factor E(n, r) of the variance sandwich

    Args:
        n: Dimension (>= 2)
        r: Distance exponent (> 0)
        cfg: Quadrature configuration (defaults to rel_tol 1e-7)
        definition: Integrate 1 + t^r - F_r literally instead of the
            M-representation (used to cross-check the two)

    Returns:
        QuadResult for E(n, r), a value in (0, 3/2]
    """
    if n < 2 or not r > 0:
        raise DomainError(f"E_factor requires n >= 2 and r > 0, got n={n}, r={r}")
    cfg = cfg or SWEEP_CONFIG
    integral = integrate_2d_iterated(
        _gap_kernel(n, r, definition), T_RANGE, PHI_RANGE, cfg,
        inner_endpoints=GRADED, outer_endpoints=GRADED)
    return _scaled(integral, LogValue.from_float(n) / _sine_power_integral(n))


def D_factor(n: int, r: float, gamma: float) -> LogValue:
    """
    Auxiliary factor D(n, r) of the variance sandwich

    Returns:
        (n kappa_n^2 / r) Gamma(2n/r + 1) (n kappa_n r / (4 gamma c(n,r)))^(2n/r)
    """
    p = ModelParams(n=n, r=r, gamma=gamma)
    return (kappa(n) ** 2 * (n / r)
            * LogValue.from_log(log_gamma_fn(p.p + 1.0)
                                + p.p * (_scale_log(n, r, gamma) - math.log(2.0))))


def variance_sandwich(p: ModelParams, cfg: Optional[QuadConfig] = None,
                      e_factor: Optional[QuadResult] = None) -> Tuple[LogValue, LogValue]:
    """
    Lower and upper variance bounds E*D and E*D*4^(2n/r + 1)

    Args:
        p: Model parameters
        cfg: Quadrature configuration for E(n, r)
        e_factor: Previously computed E(n, r), reused when given

    Returns:
        (lower, upper) as LogValues
    """
    e_factor = e_factor or E_factor(p.n, p.r, cfg)
    lower = e_factor.value * D_factor(p.n, p.r, p.gamma)
    upper = lower * LogValue.from_log((p.p + 1.0) * math.log(4.0))
    return lower, upper


def variance(p: ModelParams, cfg: Optional[QuadConfig] = None,
             e_cfg: Optional[QuadConfig] = None) -> VarianceReport:
    """
    Variance of the zero-cell volume from the difference integrand

    The integrand F^(-p) - (1+t^r)^(-p) is evaluated as
    B^(-p) expm1(p ln(B/A)) with ln(B/A) taken from the nonnegative gap, so
    the quadrature never subtracts two large numbers.

    Args:
        p: Model parameters
        cfg: Quadrature configuration for the variance integral
        e_cfg: Quadrature configuration for E(n, r) (defaults to SWEEP_CONFIG)

    Returns:
        VarianceReport with the sandwich bounds attached
    """
    cfg = cfg or MOMENT_CONFIG
    integral = integrate_2d_iterated(
        _variance_kernel(p.n, p.r, p.p), T_RANGE, PHI_RANGE, cfg,
        inner_endpoints=GRADED, outer_endpoints=GRADED)
    raw = integral.estimate
    if raw < 0.0:
        if -raw > integral.abs_error_estimate:
            raise NegativeVarianceError(
                f"Variance integral {raw:.6g} below zero beyond error {integral.abs_error_estimate:.3g} for {p}")
        raw = 0.0
    if raw == 0.0:
        quad_error = math.inf if integral.abs_error_estimate > 0 else 0.0
    else:
        quad_error = integral.abs_error_estimate / raw
    var = LogValue.from_float(raw) * _variance_prefactor(p)

    mean = mean_volume(p)
    e_result = E_factor(p.n, p.r, e_cfg or SWEEP_CONFIG)
    lower, upper = variance_sandwich(p, e_factor=e_result)
    logger.debug("Variance for %s: %s (rel. error %.3g)", p, var, quad_error)
    return VarianceReport(
        params=p,
        second_moment=var + mean * mean,
        mean=mean,
        variance=var,
        quad_error=quad_error,
        E_nr=e_result.estimate,
        D_nr=D_factor(p.n, p.r, p.gamma),
        thm310_lower=lower,
        thm310_upper=upper,
        converged=integral.converged and e_result.converged,
    )


def calibrated_intensity_log(n: int, r: float, lam: float) -> LogValue:
    """Intensity that makes the mean volume equal 1/lambda, in log space"""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    # _scale_log at gamma = 1 is ln(n kappa_n r / (2 c(n,r)))
    return LogValue.from_log(
        _scale_log(n, r, 1.0)
        + (r / n) * (math.log(lam) + log_gamma_fn(n / r + 1.0) + kappa(n).log_abs))


def calibrated_intensity(n: int, r: float, lam: float) -> float:
    """
    Intensity gamma_hat(r, n) with E[V] = 1/lambda

    Args:
        n: Dimension
        r: Distance exponent
        lam: Target reciprocal mean volume

    Returns:
        gamma_hat as a plain float

    Raises:
        OverflowFlagError: when gamma_hat is not representable; use
            calibrated_intensity_log instead
    """
    value, overflowed = calibrated_intensity_log(n, r, lam).to_float()
    if overflowed or value == 0.0:
        raise OverflowFlagError(f"Calibrated intensity for n={n}, r={r} leaves double range")
    return value


def E_lower_constant(r: float) -> float:
    """Explicit lower bound M(pi/4, r) / (2 (1 + r)) for E(n, r), valid for all n"""
    return cos_power_tail(0.25 * math.pi, r) / (2.0 * (1.0 + r))


def E_upper_explicit(n: int, r: float) -> LogValue:
    """
    Constant-free upper bound for E(n, r), n >= 3

    Returns:
        2^(n-1) Gamma((n-2)/2) Gamma((n+r)/2) / ((r+1) c(2,n-2) c(2,r) Gamma(n + r/2 - 1))
    """
    if n < 3:
        raise DomainError(f"E_upper_explicit requires n >= 3, got {n}")
    return (LogValue.from_log((n - 1) * math.log(2.0)
                              + log_gamma_fn(0.5 * (n - 2))
                              + log_gamma_fn(0.5 * (n + r))
                              - log_gamma_fn(n + 0.5 * r - 1.0))
            / (c_const(2, n - 2) * c_const(2, r) * (r + 1.0)))


def E2_upper_explicit(r: float) -> float:
    """Upper bound 2 / (c(2,r) (r+1)) for E(2, r); never exceeds 1/sqrt(r+1)"""
    return 2.0 / (float(c_const(2, r)) * (r + 1.0))


def E_growth_profile(n: int, r: float) -> Tuple[float, float]:
    """
    Constant-free growth expressions bracketing E(n, r) up to absolute constants

    Returns:
        (lower_profile, upper_profile) in log space; E(n, r) minus either
        stays bounded as n varies
    """
    core = (0.5 * n * math.log(2.0)
            - 0.5 * math.log(r + 1.0)
            - 0.5 * n * math.log1p(r / (2.0 * n))
            - 0.5 * (n + r) * math.log1p(n / (n + r)))
    lower = core - 0.5 * math.log1p(r / n)
    upper = core + math.log1p(r / n)
    return lower, upper


__all__ = [
    'MOMENT_CONFIG', 'SWEEP_CONFIG', 'MomentBounds', 'NegativeVarianceError',
    'VarianceReport', 'alpha_fn', 'gap_fn', 'F_fn', 'mean_volume', 'moment_bounds',
    'second_moment', 'variance', 'E_factor', 'D_factor', 'variance_sandwich',
    'calibrated_intensity', 'calibrated_intensity_log', 'E_lower_constant',
    'E_upper_explicit', 'E2_upper_explicit', 'E_growth_profile',
]
