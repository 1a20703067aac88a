"""
Special functions package initialization
"""
from .functions import (
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
    omega,
    sin_cos_moment,
)

__all__ = [
    'DomainError', 'LogValue', 'ModelParams', 'OverflowFlagError', 'ZeroCellError',
    'b_n2', 'c_const', 'cos_power_tail', 'kappa', 'log_gamma_fn', 'omega',
    'sin_cos_moment',
]
