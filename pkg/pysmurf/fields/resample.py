"""
Bilinear resizing of images and flow fields.
"""

from typing import Tuple

import cv2
import numpy as np

from pysmurf.errors import RejectedInputError


def resize_image(image: np.ndarray, size: Tuple[int, int], area: bool = False) -> np.ndarray:
    """
    Resize an H x W x C array to ``size`` = (height, width).

    ``area`` selects pixel-area averaging, used when building pyramids.
    """
    height, width = int(size[0]), int(size[1])
    if height <= 0 or width <= 0:
        raise RejectedInputError(f"target size must be positive, got {size}")
    arr = np.asarray(image, dtype=np.float64)
    squeeze = arr.ndim == 2
    if arr.shape[:2] == (height, width):
        return arr.copy()
    interpolation = cv2.INTER_AREA if area else cv2.INTER_LINEAR
    out = cv2.resize(arr, (width, height), interpolation=interpolation)
    if out.ndim == 2 and not squeeze:
        out = out[:, :, None]
    return out


def resize_flow(flow: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """
    Resize a flow field and rescale its vectors by the actual size ratio.
    """
    arr = np.asarray(flow, dtype=np.float64)
    src_h, src_w = arr.shape[:2]
    out = resize_image(arr, size)
    out[..., 0] *= out.shape[1] / src_w
    out[..., 1] *= out.shape[0] / src_h
    return out
