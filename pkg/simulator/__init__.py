"""
Simulator package initialization
"""
from .process import Hyperplane, ZeroCellRealization, membership, rep_generator, sample_process
from .geometry import AreaBracket, clip_halfplane, exact_area_2d, hitmiss_volume, polygon_area
from .monte_carlo import (
    CrossValidation,
    SimulationSummary,
    choose_radius,
    cross_validate,
    run_simulation,
    truncation_bias,
)

__all__ = [
    'Hyperplane', 'ZeroCellRealization', 'membership', 'rep_generator', 'sample_process',
    'AreaBracket', 'clip_halfplane', 'exact_area_2d', 'hitmiss_volume', 'polygon_area',
    'CrossValidation', 'SimulationSummary', 'choose_radius', 'cross_validate',
    'run_simulation', 'truncation_bias',
]
