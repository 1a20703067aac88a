"""
Asymptotics package initialization
"""
from .regime import (
    QUADRATURE_CEILING,
    CEILING_NOTE,
    ROW_COLUMNS,
    IntensityRule,
    RegimeMode,
    RegimeSpec,
    StirlingBrackets,
    A_rate,
    B_rate,
    decay_base,
    stirling_brackets,
    calibrated_moment_bounds,
    moment_rate_log,
    variance_rate_log,
    variance_residual,
    parameter_row,
    regime_report,
)

__all__ = [
    'QUADRATURE_CEILING', 'CEILING_NOTE', 'ROW_COLUMNS', 'IntensityRule', 'RegimeMode', 'RegimeSpec', 'StirlingBrackets',
    'A_rate', 'B_rate', 'decay_base', 'stirling_brackets', 'calibrated_moment_bounds',
    'moment_rate_log', 'variance_rate_log', 'variance_residual', 'parameter_row', 'regime_report',
]
