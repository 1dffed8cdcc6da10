"""
Shared fixtures for the bec2 test suite.
"""

import math

import numpy as np
import pytest

from bec2.model import ExactParams
from bec2.settings import get_settings


@pytest.fixture(autouse=True)
def fresh_settings():
    """
    Drop the cached settings around every test so monkeypatched env vars apply
    """
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    """
    Seeded generator for random parameter samples
    """
    return np.random.default_rng(20240611)


@pytest.fixture
def manifold_point():
    """
    Generic manifold point with every canonical coefficient nonzero
    """
    return ExactParams(a1=3.0, a2=-1.0, theta=0.7, phi=0.3, two_j=20)


@pytest.fixture
def dynamics_point():
    """
    j = 20 point used for dynamics comparisons
    """
    return ExactParams(a1=2.3, a2=1.0, theta=1.35, phi=0.3, two_j=40)


@pytest.fixture
def random_coefficients(rng):
    """
    Factory for normalized real coefficient vectors
    """
    def make(two_j: int) -> np.ndarray:
        coeffs = rng.normal(size=two_j + 1)
        return coeffs / np.linalg.norm(coeffs)
    return make


@pytest.fixture
def half_pi():
    return math.pi / 2
