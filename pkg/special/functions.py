"""
Special Functions Module
Log-space Gamma-type constants of the hyperplane model and the cos-power tail M(v, r)
"""
import functools
import logging
import math
import sys
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import betainc, gammaln

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
LOG_PI = math.log(math.pi)
# Largest log-magnitude that still converts to a finite double
LOG_FLOAT_MAX = math.log(sys.float_info.max)


class ZeroCellError(Exception):
    """Base class for all errors raised by the zerocell packages"""


class DomainError(ZeroCellError, ValueError):
    """Argument outside the mathematical domain of a function"""


class OverflowFlagError(ZeroCellError, OverflowError):
    """A plain-real result was requested for a value outside double range"""


@functools.total_ordering
@dataclass(frozen=True)
class LogValue:
    """
    Signed real number stored as (sign, ln|x|)

    Carries quantities like Gamma(2n/r) * (...)^(2n/r) that overflow a double
    long before they stop being meaningful.
    """
    sign: int
    log_abs: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"LogValue sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0:
            object.__setattr__(self, 'log_abs', -math.inf)

    @classmethod
    def from_float(cls, x: float) -> 'LogValue':
        if math.isnan(x):
            raise DomainError("Cannot represent NaN as a LogValue")
        if x == 0.0:
            return cls(0)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs: float, sign: int = 1) -> 'LogValue':
        if log_abs == -math.inf:
            return cls(0)
        return cls(sign, float(log_abs))

    @classmethod
    def zero(cls) -> 'LogValue':
        return cls(0)

    @staticmethod
    def _coerce(other: Union['LogValue', float, int]) -> 'LogValue':
        if isinstance(other, LogValue):
            return other
        return LogValue.from_float(float(other))

    def __mul__(self, other):
        other = self._coerce(other)
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_abs + other.log_abs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogValue division by zero")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, exponent: float) -> 'LogValue':
        if self.sign == 0:
            if exponent <= 0:
                raise DomainError("0 raised to a non-positive power")
            return LogValue.zero()
        if self.sign < 0:
            if float(exponent) != int(exponent):
                raise DomainError("Negative LogValue raised to a non-integer power")
            sign = -1 if int(exponent) % 2 else 1
        else:
            sign = 1
        return LogValue(sign, self.log_abs * exponent)

    def __neg__(self) -> 'LogValue':
        return LogValue(-self.sign, self.log_abs) if self.sign else self

    def __add__(self, other):
        other = self._coerce(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_abs >= other.log_abs else (other, self)
        ratio = math.exp(lo.log_abs - hi.log_abs)
        if hi.sign == lo.sign:
            return LogValue(hi.sign, hi.log_abs + math.log1p(ratio))
        if ratio == 1.0:
            return LogValue.zero()
        return LogValue(hi.sign, hi.log_abs + math.log1p(-ratio))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def _key(self) -> Tuple[int, float]:
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.log_abs)

    def __eq__(self, other):
        if not isinstance(other, (LogValue, int, float)):
            return NotImplemented
        return self._key() == self._coerce(other)._key()

    def __lt__(self, other):
        if not isinstance(other, (LogValue, int, float)):
            return NotImplemented
        return self._key() < self._coerce(other)._key()

    def __hash__(self):
        return hash(self._key())

    def to_float(self) -> Tuple[float, bool]:
        """
        Convert to a plain double

        Returns:
            Tuple of (value, overflowed). On overflow the value saturates at
            +/- sys.float_info.max instead of becoming infinite.
        """
        if self.sign == 0:
            return 0.0, False
        if self.log_abs > LOG_FLOAT_MAX:
            return self.sign * sys.float_info.max, True
        return self.sign * math.exp(self.log_abs), False

    def __float__(self) -> float:
        value, overflowed = self.to_float()
        if overflowed:
            logger.warning("LogValue exp(%.6g) saturated at float max", self.log_abs)
        return value

    def is_representable(self) -> bool:
        return not self.to_float()[1]

    def __str__(self) -> str:
        value, overflowed = self.to_float()
        if overflowed:
            return f"{'-' if self.sign < 0 else ''}exp({self.log_abs:.12g})"
        return f"{value:.12g}"


class ModelParams(BaseModel):
    """Triple (n, r, gamma) of an isotropic Poisson hyperplane process"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2, description="Dimension")
    r: float = Field(gt=0, allow_inf_nan=False, description="Distance exponent")
    gamma: float = Field(gt=0, allow_inf_nan=False, description="Intensity")

    @property
    def p(self) -> float:
        """Exponent 2n/r of the second-moment integrand"""
        return 2.0 * self.n / self.r


def log_gamma_fn(x: float) -> float:
    """
    Natural logarithm of the Gamma function for positive reals

    Args:
        x: Argument, must be > 0

    Returns:
        ln Gamma(x)
    """
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma_fn requires 0 < x < inf, got {x}")
    return float(gammaln(x))


def kappa(k: int) -> LogValue:
    """Volume of the k-dimensional unit ball, pi^(k/2) / Gamma(k/2 + 1)"""
    if k < 0:
        raise DomainError(f"kappa requires k >= 0, got {k}")
    return LogValue.from_log(0.5 * k * LOG_PI - log_gamma_fn(0.5 * k + 1.0))


def omega(k: int) -> LogValue:
    """Surface area of the unit sphere S^(k-1), k * kappa_k"""
    if k < 1:
        raise DomainError(f"omega requires k >= 1, got {k}")
    return kappa(k) * k


def c_const(n: int, r: float) -> LogValue:
    """
    Directional moment c(n, r) of the r-th power of <e, u>_+ over S^(n-1)

    Args:
        n: Dimension (>= 2)
        r: Distance exponent (> 0)

    Returns:
        pi^((n-1)/2) Gamma((r+1)/2) / Gamma((r+n)/2)
    """
    if n < 2 or not r > 0:
        raise DomainError(f"c_const requires n >= 2 and r > 0, got n={n}, r={r}")
    return LogValue.from_log(
        0.5 * (n - 1) * LOG_PI
        + log_gamma_fn(0.5 * (r + 1.0))
        - log_gamma_fn(0.5 * (r + n))
    )


def b_n2(n: int) -> LogValue:
    """Constant omega_(n-1) omega_n / (4 pi) of the second-moment formula"""
    if n < 2:
        raise DomainError(f"b_n2 requires n >= 2, got {n}")
    return omega(n - 1) * omega(n) / (4.0 * math.pi)


def sin_cos_moment(alpha: float, beta: float) -> LogValue:
    """
    Closed form of the integral of sin^alpha * cos^beta over [0, pi/2]

    Args:
        alpha: Sine exponent (> -1)
        beta: Cosine exponent (> -1)

    Returns:
        Gamma((alpha+1)/2) Gamma((beta+1)/2) / (2 Gamma((alpha+beta+2)/2))
    """
    if not (alpha > -1 and beta > -1):
        raise DomainError(f"sin_cos_moment requires alpha, beta > -1, got {alpha}, {beta}")
    return LogValue.from_log(
        log_gamma_fn(0.5 * (alpha + 1.0))
        + log_gamma_fn(0.5 * (beta + 1.0))
        - log_gamma_fn(0.5 * (alpha + beta + 2.0))
        - math.log(2.0)
    )


def cos_power_tail(v, r: float):
    """
    Normalised tail M(v, r) = (1/c(2,r)) * integral of cos^r over [v, pi/2]

    Evaluated through the regularised incomplete beta function:
    for v >= 0, M(v, r) = I_{cos^2 v}((r+1)/2, 1/2) / 2, and M(-v, r) = 1 - M(v, r).

    Args:
        v: Scalar or array of angles in [-pi/2, pi/2]
        r: Exponent (> 0)

    Returns:
        M(v, r) with the same shape as v (a float for scalar input)
    """
    if not r > 0:
        raise DomainError(f"cos_power_tail requires r > 0, got {r}")
    v = np.asarray(v, dtype=float)
    if np.any(np.isnan(v)) or np.any(np.abs(v) > HALF_PI * (1.0 + 1e-12)):
        raise DomainError("cos_power_tail requires v in [-pi/2, pi/2]")
    v = np.clip(v, -HALF_PI, HALF_PI)
    half_tail = 0.5 * betainc(0.5 * (r + 1.0), 0.5, np.cos(v) ** 2)
    result = np.where(v >= 0.0, half_tail, 1.0 - half_tail)
    if result.ndim == 0:
        return float(result)
    return result
