"""Shared fixtures for the zero-cell test suite."""

import pytest

from special.functions import ModelParams
from quadrature.integrator import QuadConfig


@pytest.fixture
def planar_params():
    return ModelParams(n=2, r=1.0, gamma=1.0)


@pytest.fixture
def fast_quad():
    """Looser tolerance for tests that only need a few digits."""
    return QuadConfig(rel_tol=1e-6)
