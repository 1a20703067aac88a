"""
Monte Carlo Module
Replicated zero-cell volumes, truncation bias control and cross-validation
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import gammaincc
from scipy.stats import norm

from special.functions import (
    DomainError,
    LogValue,
    ModelParams,
    c_const,
    kappa,
    log_gamma_fn,
    omega,
)
from quadrature.integrator import QuadConfig
from engine.exact import mean_volume, moment_bounds, variance
from simulator.process import rep_generator, sample_process
from simulator.geometry import exact_area_2d, hitmiss_volume

logger = logging.getLogger(__name__)

MIN_REPS = 100
CI_LEVEL = 0.95
BISECTION_STEPS = 80
CV_FACTOR = 3.0


def _log_beta(p: ModelParams) -> float:
    """ln of 2 gamma c(n,r) / (n kappa_n r), the rate in P(x in Z_0) = exp(-beta |x|^r)"""
    return (math.log(2.0 * p.gamma) + c_const(p.n, p.r).log_abs
            - math.log(p.n) - kappa(p.n).log_abs - math.log(p.r))


def _log_tail(p: ModelParams, log_b: float, R: float) -> float:
    """ln of the integral of exp(-b |x|^r) over |x| > R"""
    shape = p.n / p.r
    q = gammaincc(shape, math.exp(log_b) * R ** p.r)
    if q <= 0.0:
        return -math.inf
    return (omega(p.n).log_abs + log_gamma_fn(shape) + math.log(q)
            - math.log(p.r) - shape * log_b)


def _log_truncation_bias(p: ModelParams, R: float) -> Tuple[float, float]:
    log_beta = _log_beta(p)
    log_mean = _log_tail(p, log_beta, R)
    # E[V^2] - E[V_R^2] <= 2 sqrt(E[V^2]) sqrt(E[(V - V_R)^2]) and
    # P(x1, x2 in Z_0) <= sqrt(P(x1 in Z_0) P(x2 in Z_0))
    log_second = (math.log(2.0) + 0.5 * moment_bounds(p, 2).upper.log_abs
                  + _log_tail(p, log_beta - math.log(2.0), R))
    return log_mean, log_second


def truncation_bias(p: ModelParams, R: float) -> Tuple[float, float]:
    """
    Bounds on the volume moments lost by cutting the cell at radius R

    Args:
        p: Model parameters
        R: Truncation radius

    Returns:
        (bias_mean, bias_second): bias_mean is exactly E[V(Z_0 minus B_R)],
        bias_second bounds E[V(Z_0)^2] - E[V(Z_0 cut by B_R)^2]
    """
    if not R > 0:
        raise DomainError(f"Truncation radius must be positive, got {R}")
    log_mean, log_second = _log_truncation_bias(p, R)
    return float(LogValue.from_log(log_mean)), float(LogValue.from_log(log_second))


def choose_radius(p: ModelParams, eps_bias: float = 1e-4) -> float:
    """
    Smallest radius (up to bisection precision) with both biases below eps_bias

    The mean bias is measured against E[V] and the second-moment bias
    against the lower k = 2 moment bound.
    """
    if not 0 < eps_bias < 1:
        raise DomainError(f"eps_bias must lie in (0, 1), got {eps_bias}")
    log_eps = math.log(eps_bias)
    log_mean_ref = mean_volume(p).log_abs
    log_second_ref = moment_bounds(p, 2).lower.log_abs

    def excess(R: float) -> float:
        log_mean, log_second = _log_truncation_bias(p, R)
        return max(log_mean - log_eps - log_mean_ref, log_second - log_eps - log_second_ref)

    lo, hi = 0.0, math.exp(-_log_beta(p) / p.r)
    while excess(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    logger.debug("Truncation radius for %s at eps %.3g: %.6g", p, eps_bias, hi)
    return hi


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregated Monte Carlo estimates for one parameter set"""
    reps: int
    mean_est: float
    mean_ci_half_width: float
    second_moment_est: float
    var_est: float
    var_ci_half_width: float
    truncation_bias_bound_mean: float
    truncation_bias_bound_second: float
    seed: int
    params: ModelParams
    radius: float
    m_points: int
    geometric_gap: float
    volumes: np.ndarray = field(compare=False, repr=False)
    std_errors: np.ndarray = field(compare=False, repr=False)
    gaps: np.ndarray = field(compare=False, repr=False)
    centroids: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def to_frame(self) -> pd.DataFrame:
        """Per-replication volumes"""
        df = pd.DataFrame({
            'rep': np.arange(self.reps),
            'volume': self.volumes,
            'std_error': self.std_errors,
            'gap': self.gaps,
        })
        if self.centroids is not None:
            df['centroid_x'] = self.centroids[:, 0]
            df['centroid_y'] = self.centroids[:, 1]
        return df


@dataclass(frozen=True)
class CrossValidation:
    """Simulated moments against the exact ones, with the declared tolerances"""
    mean_exact: float
    mean_diff: float
    mean_tolerance: float
    var_exact: float
    var_diff: float
    var_tolerance: float

    @property
    def mean_ok(self) -> bool:
        return self.mean_diff <= self.mean_tolerance

    @property
    def var_ok(self) -> bool:
        return self.var_diff <= self.var_tolerance

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.var_ok


def _replicate(p: ModelParams, R: float, m_points: int, seed: int, rep: int):
    rng = rep_generator(seed, rep)
    cell = sample_process(p, R, rng)
    if p.n == 2:
        bracket = exact_area_2d(cell)
        return bracket.area, 0.0, bracket.gap, bracket.centroid
    estimate, std_error = hitmiss_volume(cell, m_points, rng)
    return estimate, std_error, 0.0, None


def run_simulation(p: ModelParams, reps: int, m_points: int = 100_000,
                   eps_bias: float = 1e-4, seed: int = 0, workers: int = 1) -> SimulationSummary:
    """
    Replicate the truncated zero cell and summarise its volume

    Args:
        p: Model parameters
        reps: Number of replications (>= 100)
        m_points: Hit-or-miss points per replication (n >= 3 only)
        eps_bias: Relative truncation bias allowed for both moments
        seed: Root seed; replication i uses the stream (seed, i)
        workers: Thread count; the result does not depend on it

    Returns:
        SimulationSummary with 95% normal confidence half-widths; the variance
        interval uses the empirical fourth central moment
    """
    if reps < MIN_REPS:
        raise DomainError(f"run_simulation needs at least {MIN_REPS} replications, got {reps}")
    R = choose_radius(p, eps_bias)
    bias_mean, bias_second = truncation_bias(p, R)
    logger.info("Simulating %s: %d reps, radius %.6g, seed %d", p, reps, R, seed)

    def one(rep: int):
        return _replicate(p, R, m_points, seed, rep)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(one, range(reps)))
    else:
        results = [one(rep) for rep in range(reps)]

    volumes = np.array([res[0] for res in results])
    std_errors = np.array([res[1] for res in results])
    gaps = np.array([res[2] for res in results])
    centroids = np.stack([res[3] for res in results]) if p.n == 2 else None

    z = norm.ppf(0.5 + 0.5 * CI_LEVEL)
    mean_est = float(np.mean(volumes))
    sample_var = float(np.var(volumes, ddof=1))
    # hit-or-miss noise inflates the spread of the per-rep estimates
    var_est = max(sample_var - float(np.mean(std_errors ** 2)), 0.0)
    fourth = float(np.mean((volumes - mean_est) ** 4))

    return SimulationSummary(
        reps=reps,
        mean_est=mean_est,
        mean_ci_half_width=float(z * math.sqrt(sample_var / reps)),
        second_moment_est=float(np.mean(volumes ** 2)),
        var_est=var_est,
        var_ci_half_width=float(z * math.sqrt(max(fourth - sample_var ** 2, 0.0) / reps)),
        truncation_bias_bound_mean=bias_mean,
        truncation_bias_bound_second=bias_second,
        seed=seed,
        params=p,
        radius=R,
        m_points=0 if p.n == 2 else m_points,
        geometric_gap=float(np.mean(gaps)),
        volumes=volumes,
        std_errors=std_errors,
        gaps=gaps,
        centroids=centroids,
    )


def cross_validate(summary: SimulationSummary, cfg: Optional[QuadConfig] = None) -> CrossValidation:
    """
    Compare a simulation with the exact mean and the quadrature variance

    Tolerances are 3 confidence half-widths plus the declared truncation
    bias plus, for planar cells, half the mean polygon bracket gap.
    """
    p = summary.params
    mean_exact = float(mean_volume(p))
    var_exact = float(variance(p, cfg).variance)
    half_gap = 0.5 * summary.geometric_gap

    mean_tolerance = (CV_FACTOR * summary.mean_ci_half_width
                      + summary.truncation_bias_bound_mean + half_gap)
    var_tolerance = (CV_FACTOR * summary.var_ci_half_width
                     + summary.truncation_bias_bound_second
                     + 2.0 * mean_exact * (summary.truncation_bias_bound_mean + half_gap))
    result = CrossValidation(
        mean_exact=mean_exact,
        mean_diff=abs(summary.mean_est - mean_exact),
        mean_tolerance=mean_tolerance,
        var_exact=var_exact,
        var_diff=abs(summary.var_est - var_exact),
        var_tolerance=var_tolerance,
    )
    logger.info("Cross-validation for %s: mean %s, variance %s", p,
                "ok" if result.mean_ok else "FAILED", "ok" if result.var_ok else "FAILED")
    return result
