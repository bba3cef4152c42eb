"""
Flow colour coding: hue is direction, saturation is magnitude.
"""

from typing import Optional

import cv2
import numpy as np

from pysmurf.fields.types import as_flow


def colorize_flow(flow: np.ndarray, max_norm: Optional[float] = None) -> np.ndarray:
    """
    Render a flow field as an RGB image in [0, 1].

    Zero flow is white (the wheel's center). The hue is the direction angle
    of (u, v); saturation is |flow| / max_norm, clipped to 1.

    Args:
        flow: H x W x 2 flow
        max_norm: magnitude rendered fully saturated (field maximum by default)
    """
    flow = as_flow(flow)
    magnitude = np.sqrt(np.sum(flow ** 2, axis=2))
    if max_norm is None:
        max_norm = float(magnitude.max())
    angle = np.degrees(np.arctan2(flow[..., 1], flow[..., 0])) % 360.0
    saturation = np.clip(magnitude / max_norm, 0.0, 1.0) if max_norm > 0 else np.zeros_like(magnitude)
    hsv = np.stack([angle, saturation, np.ones_like(magnitude)], axis=-1).astype(np.float32)
    return cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB).astype(np.float64)
