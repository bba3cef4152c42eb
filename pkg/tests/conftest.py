"""
Pytest configuration for pysmurf tests.
"""

import numpy as np
import pytest

from pysmurf.checks.synthetic import textured_noise, translated_pair
from pysmurf.plugins import EstimatorRegistry

pytest_plugins = ['pytest_asyncio']


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def texture():
    """Factory for blurred noise images in [0.1, 0.9]."""
    def make(height=16, width=16, channels=3, seed=0):
        return textured_noise(height, width, channels, seed=seed)
    return make


@pytest.fixture
def shifted_pair():
    """A 24 x 24 pair moved by (1.5, -1.0)."""
    return translated_pair(24, 24, (1.5, -1.0), seed=3)


@pytest.fixture(autouse=True)
def _isolate_global_estimators():
    """Plugins registered globally by one test must not leak into the next."""
    saved = dict(EstimatorRegistry._global_registry)
    yield
    EstimatorRegistry._global_registry.clear()
    EstimatorRegistry._global_registry.update(saved)
