"""
Occlusion masks for frame 1 from forward and backward flow.
"""

from typing import Optional

import numpy as np

from pysmurf.fields.types import CropWindow
from pysmurf.occlusion.config import FbParams, OcclusionConfig
from pysmurf.occlusion.estimators import (
    AllVisibleEstimator,
    FbConsistencyEstimator,
    RangeMapEstimator,
    apply_full_image_override,
    occlusion_from_fb_consistency,
    occlusion_from_range_map,
    sample_flow,
    soft_threshold,
)
from pysmurf.plugins.base import EstimatorRegistry


def estimate_occlusion(
    forward_flow: np.ndarray,
    backward_flow: Optional[np.ndarray],
    config: Optional[OcclusionConfig] = None,
    crop: Optional[CropWindow] = None,
    registry: Optional[EstimatorRegistry] = None,
) -> np.ndarray:
    """
    Run the configured estimator, then the full-image override when a
    non-trivial crop is given.
    """
    config = config or OcclusionConfig()
    registry = registry or EstimatorRegistry()
    estimator = registry.create(config.method, **config.estimator_kwargs())
    mask = estimator.estimate(forward_flow, backward_flow)
    if crop is not None and config.full_image_override and not crop.is_full:
        mask = apply_full_image_override(mask, forward_flow, crop)
    return mask


__all__ = [
    "FbParams",
    "OcclusionConfig",
    "AllVisibleEstimator",
    "FbConsistencyEstimator",
    "RangeMapEstimator",
    "apply_full_image_override",
    "estimate_occlusion",
    "occlusion_from_fb_consistency",
    "occlusion_from_range_map",
    "sample_flow",
    "soft_threshold",
]
