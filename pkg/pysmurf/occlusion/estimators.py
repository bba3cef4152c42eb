"""
Occlusion estimators: range-map coverage and forward-backward consistency.

Masks are plain arrays; no gradient ever flows through them.
"""

from typing import Any, Optional

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.sampling import bilinear_sample_with_grad, forward_splat_count, warp_coordinates
from pysmurf.fields.types import CropWindow, as_flow, as_mask
from pysmurf.occlusion.config import FbParams
from pysmurf.plugins.base import BaseOcclusionEstimator, EstimatorConfig, occlusion_plugin


def soft_threshold(coverage: np.ndarray, threshold: float = 0.75) -> np.ndarray:
    """1 at or above ``threshold``, linear ramp to 0 below it."""
    if not 0.0 < threshold <= 1.0:
        raise RejectedInputError(f"threshold must lie in (0, 1], got {threshold}")
    clipped = np.clip(coverage, 0.0, 1.0)
    return np.where(clipped >= threshold, 1.0, clipped / threshold)


def occlusion_from_range_map(backward_flow: np.ndarray, threshold: float = 0.75) -> np.ndarray:
    """
    Frame-1 visibility from how much frame-2 mass the backward flow splats
    onto each frame-1 pixel.

    Args:
        backward_flow: frame 2 -> frame 1 flow
        threshold: coverage at which a pixel counts as fully visible

    Returns:
        H x W mask in [0, 1]
    """
    return soft_threshold(forward_splat_count(backward_flow), threshold)


def sample_flow(flow: np.ndarray, xs: np.ndarray, ys: np.ndarray, policy: str = "clamp") -> np.ndarray:
    """Bilinearly sample both flow channels at (xs, ys)."""
    return np.stack(
        [bilinear_sample_with_grad(flow[..., c], xs, ys, policy).values[..., 0] for c in range(2)],
        axis=-1,
    )


def occlusion_from_fb_consistency(
    forward_flow: np.ndarray,
    backward_flow: np.ndarray,
    params: Optional[FbParams] = None,
) -> np.ndarray:
    """
    Binary visibility from forward-backward consistency.

    The backward flow is sampled at p + f(p) with border clamping.
    """
    params = params or FbParams()
    forward = as_flow(forward_flow, "forward_flow")
    backward = as_flow(backward_flow, "backward_flow")
    if forward.shape != backward.shape:
        raise RejectedInputError(
            f"forward {forward.shape[:2]} and backward {backward.shape[:2]} dimensions differ"
        )
    xs, ys = warp_coordinates(forward)
    backward_at_target = sample_flow(backward, xs, ys, "clamp")

    mismatch = np.sum((forward + backward_at_target) ** 2, axis=2)
    magnitude = np.sum(forward ** 2, axis=2) + np.sum(backward_at_target ** 2, axis=2)
    visible = mismatch < params.alpha1 * magnitude + params.alpha2
    return visible.astype(np.float64)


def apply_full_image_override(
    mask: np.ndarray,
    forward_flow: np.ndarray,
    crop: CropWindow,
) -> np.ndarray:
    """
    Mark visible every crop pixel whose target leaves the crop but stays
    inside the full frame; full-image warping still sees a real pixel there.
    """
    forward = as_flow(forward_flow, "forward_flow")
    mask = as_mask(mask, forward.shape[:2], "occlusion")
    xs, ys = warp_coordinates(forward, crop)
    in_frame = (xs >= 0) & (xs <= crop.full_width - 1) & (ys >= 0) & (ys <= crop.full_height - 1)
    in_crop = (
        (xs >= crop.x_offset) & (xs <= crop.x_offset + crop.width - 1)
        & (ys >= crop.y_offset) & (ys <= crop.y_offset + crop.height - 1)
    )
    return np.where(in_frame & ~in_crop, 1.0, mask)


# ========================================
# BUILT-IN ESTIMATOR PLUGINS
# ========================================

@occlusion_plugin
class RangeMapEstimator(BaseOcclusionEstimator):
    """Coverage of frame 1 by the splatted backward flow."""

    def __init__(self, threshold: float = 0.75, **kwargs: Any):
        super().__init__(threshold=threshold, **kwargs)
        self.threshold = threshold

    @classmethod
    def get_config(cls) -> EstimatorConfig:
        return EstimatorConfig(name="range_map", description="range-map coverage, soft threshold")

    def estimate(self, forward: np.ndarray, backward: Optional[np.ndarray] = None) -> np.ndarray:
        if backward is None:
            raise RejectedInputError("range_map estimator needs the backward flow")
        return occlusion_from_range_map(backward, self.threshold)


@occlusion_plugin
class FbConsistencyEstimator(BaseOcclusionEstimator):
    """Forward-backward consistency check."""

    def __init__(self, params: Optional[FbParams] = None, **kwargs: Any):
        super().__init__(params=params, **kwargs)
        self.params = params or FbParams()

    @classmethod
    def get_config(cls) -> EstimatorConfig:
        return EstimatorConfig(name="fb_consistency", description="forward-backward consistency")

    def estimate(self, forward: np.ndarray, backward: Optional[np.ndarray] = None) -> np.ndarray:
        if backward is None:
            raise RejectedInputError("fb_consistency estimator needs the backward flow")
        return occlusion_from_fb_consistency(forward, backward, self.params)


@occlusion_plugin
class AllVisibleEstimator(BaseOcclusionEstimator):
    """No occlusion handling."""

    @classmethod
    def get_config(cls) -> EstimatorConfig:
        return EstimatorConfig(name="none", description="every pixel visible", needs_backward=False)

    def estimate(self, forward: np.ndarray, backward: Optional[np.ndarray] = None) -> np.ndarray:
        return np.ones(as_flow(forward).shape[:2])
