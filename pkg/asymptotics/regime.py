"""
High-Dimensional Regime Module
Rate constants, Stirling brackets and per-dimension regime tables
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from special.functions import LOG_PI, LogValue, ModelParams, ZeroCellError, log_gamma_fn
from quadrature.integrator import QuadConfig
from engine.exact import (
    MOMENT_CONFIG,
    calibrated_intensity,
    mean_volume,
    moment_bounds,
    variance,
)

logger = logging.getLogger(__name__)

# beyond this dimension only closed-form columns are filled
QUADRATURE_CEILING = 40
RELAXED_ABOVE = 25
RELAXED_TOL = 1e-6
CEILING_NOTE = 'bounds only above quadrature ceiling'
ROW_COLUMNS = (
    'n', 'r', 'gamma', 'mean', 'log_mean', 'k2_lower', 'log_k2_lower', 'k2_upper', 'log_k2_upper',
    'var', 'log_var', 'second_moment', 'log_second_moment', 'var_lower', 'log_var_lower',
    'var_upper', 'log_var_upper', 'D_nr', 'log_D_nr', 'E_nr', 'quad_err', 'converged', 'error',
)

Bracket = Tuple[LogValue, Optional[LogValue]]


class RegimeMode(str, Enum):
    FIXED_R = 'fixed_r'
    PROPORTIONAL = 'proportional'


class IntensityRule(str, Enum):
    CONSTANT = 'constant'
    CALIBRATED = 'calibrated'


class RegimeSpec(BaseModel):
    """
    How r and gamma follow the dimension

    exponent is r for fixed_r mode and a (with r = a n) for proportional
    mode; level is gamma for a constant intensity and lambda for a
    calibrated one.
    """
    model_config = ConfigDict(frozen=True)

    mode: RegimeMode = RegimeMode.FIXED_R
    exponent: float = Field(1.0, gt=0, allow_inf_nan=False)
    intensity_rule: IntensityRule = IntensityRule.CONSTANT
    level: float = Field(1.0, gt=0, allow_inf_nan=False)

    def r_for(self, n: int) -> float:
        return self.exponent * n if self.mode == RegimeMode.PROPORTIONAL else self.exponent

    def gamma_for(self, n: int) -> float:
        if self.intensity_rule == IntensityRule.CALIBRATED:
            return calibrated_intensity(n, self.r_for(n), self.level)
        return self.level

    def params(self, n: int) -> ModelParams:
        return ModelParams(n=n, r=self.r_for(n), gamma=self.gamma_for(n))


@dataclass(frozen=True)
class StirlingBrackets:
    """Stirling-formula brackets; calc3 carries a lower bound only"""
    calc1: Bracket
    calc2: Bracket
    calc3: Bracket


def A_rate(r: float) -> float:
    """Growth constant pi^((r+1)/2) / (e Gamma((r+1)/2)) of the fixed-r regime"""
    return math.exp(0.5 * (r + 1.0) * LOG_PI - 1.0 - log_gamma_fn(0.5 * (r + 1.0)))


def B_rate(a: float) -> float:
    """Growth constant 2 pi e (a+1)^((a+1)/a) / a of the proportional regime"""
    if not a > 0:
        raise ValueError(f"B_rate requires a > 0, got {a}")
    return 2.0 * math.pi * math.e * math.exp((a + 1.0) / a * math.log1p(a)) / a


def log_decay_base(a: float) -> float:
    return math.log(4.0) + (a + 1.0) * math.log1p(a) - (a + 2.0) * math.log(a + 2.0)


def decay_base(a: float) -> float:
    """
    Per-dimension variance decay factor 4 (a+1)^(a+1) / (a+2)^(a+2)

    Args:
        a: Ratio r / n (> 0)

    Returns:
        Value in (0, 1); the calibrated variance behaves like its n/2-th power
    """
    if not a > 0:
        raise ValueError(f"decay_base requires a > 0, got {a}")
    return math.exp(log_decay_base(a))


def stirling_brackets(n: int, r: float, k: int = 1) -> StirlingBrackets:
    """
    Stirling-formula brackets for the three Gamma-type products in the moments

    Args:
        n: Dimension (>= 2)
        r: Distance exponent
        k: Moment order

    Returns:
        StirlingBrackets with
            calc1 bracketing n kappa_n r / (2 c(n, r)),
            calc2 bracketing Gamma(kn/r + 1) kappa_n^k,
            calc3 bounding Gamma(n/r + 1)^k kappa_n^k from below
    """
    half_log_2e_pi = 0.5 * math.log(2.0 * math.e * math.pi)

    core1 = (0.5 * LOG_PI + math.log(r) - log_gamma_fn(0.5 * (r + 1.0))
             - 0.5 * r * math.log(2.0 * math.e)
             + 0.5 * (n - 1) * math.log((n + r) / n)
             + 0.5 * r * math.log(n + r))
    calc1 = (LogValue.from_log(core1 - 1.0 / (6.0 * n)),
             LogValue.from_log(core1 + 1.0 / (6.0 * (n + r))))

    core2 = (0.5 * math.log(2.0 * math.pi / r) - 1.0
             + 0.5 * k * (2.0 - LOG_PI)
             + 0.5 * math.log(k * n + r) - 0.5 * k * math.log(n + 2.0)
             + n * k * (half_log_2e_pi - math.log(r * math.e / k) / r)
             + n * k * (math.log(n + r / k) / r - 0.5 * math.log(n + 2.0)))
    calc2 = (LogValue.from_log(core2 - k / (6.0 * (n + 2.0))),
             LogValue.from_log(core2 + r / (12.0 * (k * n + r))))

    core3 = (0.5 * k * math.log(2.0 / r)
             + 0.5 * k * math.log((n + r) / (n + 2.0))
             + n * k * (half_log_2e_pi - (math.log(r) + 1.0) / r)
             - k / (6.0 * (n + 2.0))
             + n * k * (math.log(n + r) / r - 0.5 * math.log(n + 2.0)))
    calc3 = (LogValue.from_log(core3), None)

    return StirlingBrackets(calc1=calc1, calc2=calc2, calc3=calc3)


def calibrated_moment_bounds(a: float, k: int, lam: float) -> Tuple[LogValue, LogValue]:
    """
    Dimension-free moment bounds under the calibrated intensity with r = a n

    Returns:
        (1 / lambda^k, Gamma(k/a + 1) / (lambda^k Gamma(1/a + 1)^k))
    """
    lower = LogValue.from_log(-k * math.log(lam))
    upper = lower * LogValue.from_log(log_gamma_fn(k / a + 1.0) - k * log_gamma_fn(1.0 / a + 1.0))
    return lower, upper


def moment_rate_log(spec: RegimeSpec, n: int, k: int = 1) -> Tuple[float, float]:
    """
    Log of the constant-free lower/upper growth expressions for E[V^k]

    For a constant intensity these are the fixed-r and r = a n growth laws;
    for a calibrated intensity they are the exact dimension-free bounds.
    Subtracting them from log E[V^k] leaves a sequence bounded in n.
    """
    if spec.intensity_rule == IntensityRule.CALIBRATED:
        if spec.mode == RegimeMode.PROPORTIONAL:
            lower, upper = calibrated_moment_bounds(spec.exponent, k, spec.level)
            return lower.log_abs, upper.log_abs
        level = -k * math.log(spec.level)
        if k == 1:
            return level, level
        raise ZeroCellError("Calibrated fixed-r growth is only known for the mean")

    gamma = spec.level
    if spec.mode == RegimeMode.FIXED_R:
        r = spec.exponent
        base = math.log(A_rate(r)) - math.log(gamma) + 0.5 * n * math.log1p(r / n)
        lower = (k * n / r) * (base + math.log(n))
        upper = 0.5 * (1 - k) * math.log(n) + (k * n / r) * (base + math.log(k * n))
        return lower, upper
    a = spec.exponent
    rate = (-(k / a) * math.log(gamma) + (k / a - 0.5 * k) * math.log(n)
            + 0.5 * k * n * (math.log(B_rate(a)) - math.log(n)))
    return rate, rate


def variance_rate_log(spec: RegimeSpec, n: int) -> Tuple[float, float]:
    """
    Log of the constant-free lower/upper growth expressions for Var[V]

    Returns:
        (lower, upper); upper is nan where only a lower growth law is known
    """
    if spec.mode == RegimeMode.FIXED_R:
        if spec.intensity_rule == IntensityRule.CALIBRATED:
            return -2.0 * math.log(spec.level) + 0.5 * math.log(n), math.nan
        r, gamma = spec.exponent, spec.level
        base = math.log(A_rate(r)) + math.log(n) - math.log(gamma) + 0.5 * n * math.log1p(r / n)
        lower = 0.5 * math.log(n) + (2.0 * n / r) * base
        upper = lower + (2.0 * n / r) * math.log(4.0)
        return lower, upper

    a = spec.exponent
    decay = 0.5 * n * log_decay_base(a)
    if spec.intensity_rule == IntensityRule.CALIBRATED:
        rate = -2.0 * math.log(spec.level) - 0.5 * math.log(n) + decay
    else:
        rate = (decay - (2.0 / a) * math.log(spec.level)
                + (2.0 / a - 1.5) * math.log(n)
                + n * (math.log(B_rate(a)) - math.log(n)))
    return rate, rate


def variance_residual(spec: RegimeSpec, n: int, var: LogValue) -> Tuple[float, float]:
    """
    log Var minus each growth expression

    The first entry stays bounded below in n, the second bounded above.
    """
    lower, upper = variance_rate_log(spec, n)
    return var.log_abs - lower, var.log_abs - upper


def _plain(value: Optional[LogValue]) -> float:
    if value is None:
        return math.nan
    number, overflowed = value.to_float()
    return math.copysign(math.inf, number) if overflowed else number


def _log(value: Optional[LogValue]) -> float:
    return math.nan if value is None or value.sign == 0 else value.log_abs


def _with_log(row: Dict, name: str, value: Optional[LogValue]):
    row[name] = _plain(value)
    row[f'log_{name}'] = _log(value)


def parameter_row(params: ModelParams, cfg: Optional[QuadConfig] = None,
                  with_variance: bool = True) -> Dict:
    """
    Closed-form moments and, optionally, the quadrature variance for one parameter set

    Every quantity that can leave double range is stored twice: as a float
    (infinite on overflow) and as its natural log under a log_ prefix.

    Raises:
        ZeroCellError: when a closed form or the quadrature fails
    """
    row = {'n': params.n, 'r': params.r, 'gamma': params.gamma}
    bounds = moment_bounds(params, 2)
    _with_log(row, 'mean', mean_volume(params))
    _with_log(row, 'k2_lower', bounds.lower)
    _with_log(row, 'k2_upper', bounds.upper)
    if not with_variance:
        return row
    report = variance(params, cfg)
    _with_log(row, 'var', report.variance)
    _with_log(row, 'second_moment', report.second_moment)
    _with_log(row, 'var_lower', report.thm310_lower)
    _with_log(row, 'var_upper', report.thm310_upper)
    _with_log(row, 'D_nr', report.D_nr)
    row.update({'E_nr': report.E_nr, 'quad_err': report.quad_error,
                'converged': report.converged, 'error': ''})
    return row


def _regime_row(spec: RegimeSpec, n: int, cfg: QuadConfig) -> Dict:
    row = {'n': n, 'r': spec.r_for(n)}
    try:
        if n > RELAXED_ABOVE:
            cfg = cfg.model_copy(update={'rel_tol': max(cfg.rel_tol, RELAXED_TOL)})
        quadrature = n <= QUADRATURE_CEILING
        row.update(parameter_row(spec.params(n), cfg, with_variance=quadrature))
        if not quadrature:
            row.update({'converged': False, 'error': CEILING_NOTE})
    except (ZeroCellError, ValueError, OverflowError) as e:
        logger.warning("Regime row n=%d failed: %s", n, e)
        row.update({'converged': False, 'error': str(e)})
    return row


def regime_report(spec: RegimeSpec, n_range: Iterable[int],
                  cfg: Optional[QuadConfig] = None, workers: int = 1) -> pd.DataFrame:
    """
    Per-dimension table of mean, k=2 bounds, variance and variance bounds

    Args:
        spec: How r and gamma depend on n
        n_range: Dimensions to tabulate
        cfg: Quadrature configuration (rel_tol is relaxed above n = 25)
        workers: Thread count for computing rows concurrently

    Returns:
        DataFrame ordered by n. Failed rows stay in the table with
        converged=False and the error text. For a proportional calibrated
        regime the table also carries the empirical ratios Var(n+1)/Var(n)
        and Var(n+2)/Var(n) next to their predicted values.
    """
    cfg = cfg or MOMENT_CONFIG
    dims = sorted(set(int(n) for n in n_range))
    logger.info("Regime report %s over n=%s..%s", spec, dims[0] if dims else None, dims[-1] if dims else None)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(lambda n: _regime_row(spec, n, cfg), dims))
    else:
        rows = [_regime_row(spec, n, cfg) for n in dims]

    df = pd.DataFrame(rows).reindex(columns=list(ROW_COLUMNS))
    df['error'] = df['error'].fillna('')

    if spec.mode == RegimeMode.PROPORTIONAL and spec.intensity_rule == IntensityRule.CALIBRATED:
        log_var = df.set_index('n')['log_var']
        base = decay_base(spec.exponent)
        df['decay_base'] = base
        for step in (1, 2):
            df[f'var_ratio_{step}'] = [
                math.exp(log_var.get(n + step, math.nan) - log_var[n]) for n in df['n']]
            df[f'predicted_ratio_{step}'] = [
                base ** (0.5 * step) * math.sqrt(n / (n + step)) for n in df['n']]
    return df


__all__ = [
    'QUADRATURE_CEILING', 'CEILING_NOTE', 'ROW_COLUMNS', 'RegimeMode', 'IntensityRule', 'RegimeSpec', 'StirlingBrackets',
    'A_rate', 'B_rate', 'decay_base', 'stirling_brackets', 'calibrated_moment_bounds',
    'moment_rate_log', 'variance_rate_log', 'variance_residual', 'parameter_row', 'regime_report',
]
