"""
Quadrature package initialization
"""
from .kronrod import KronrodRule, QuadRule, kronrod_rule
from .integrator import (
    IntegrandError,
    QuadConfig,
    QuadResult,
    graded_breakpoints,
    integrate_1d,
    integrate_2d_iterated,
)

__all__ = [
    'KronrodRule', 'QuadRule', 'kronrod_rule', 'IntegrandError', 'QuadConfig',
    'QuadResult', 'graded_breakpoints', 'integrate_1d', 'integrate_2d_iterated',
]
