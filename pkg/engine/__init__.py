"""
Exact engine package initialization
"""
from .exact import (
    MOMENT_CONFIG,
    SWEEP_CONFIG,
    MomentBounds,
    NegativeVarianceError,
    VarianceReport,
    alpha_fn,
    gap_fn,
    F_fn,
    mean_volume,
    moment_bounds,
    second_moment,
    variance,
    E_factor,
    D_factor,
    variance_sandwich,
    calibrated_intensity,
    calibrated_intensity_log,
    E_lower_constant,
    E_upper_explicit,
    E2_upper_explicit,
    E_growth_profile,
)

__all__ = [
    'MOMENT_CONFIG', 'SWEEP_CONFIG', 'MomentBounds', 'NegativeVarianceError', 'VarianceReport',
    'alpha_fn', 'gap_fn', 'F_fn', 'mean_volume', 'moment_bounds', 'second_moment', 'variance',
    'E_factor', 'D_factor', 'variance_sandwich', 'calibrated_intensity', 'calibrated_intensity_log',
    'E_lower_constant', 'E_upper_explicit', 'E2_upper_explicit', 'E_growth_profile',
]
