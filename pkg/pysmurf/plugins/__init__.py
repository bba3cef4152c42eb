"""
pysmurf plugin system: pluggable occlusion estimators.
"""

from pysmurf.plugins.base import (
    BaseOcclusionEstimator,
    EstimatorConfig,
    EstimatorRegistry,
    occlusion_plugin,
)
from pysmurf.plugins.loader import PluginLoader

__all__ = [
    "BaseOcclusionEstimator",
    "EstimatorConfig",
    "EstimatorRegistry",
    "occlusion_plugin",
    "PluginLoader",
]
