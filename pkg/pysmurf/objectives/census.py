"""
Census transform, soft Hamming distance and the generalized Charbonnier.
"""

from functools import lru_cache
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pysmurf.errors import RejectedInputError
from pysmurf.fields.types import as_image


class CensusFeatures(NamedTuple):
    """
    Census descriptor of an intensity map.

    ``differences`` holds the raw (scaled) center-minus-neighbour values the
    features were computed from; the photometric gradient needs them.
    """
    features: np.ndarray          # H x W x (window^2 - 1)
    differences: np.ndarray       # H x W x (window^2 - 1)
    channel_validity: np.ndarray  # H x W x (window^2 - 1), 1 where the neighbour is in frame
    border_validity: np.ndarray   # H x W, in-frame fraction of the window


def census_offsets(window: int) -> List[Tuple[int, int]]:
    """(dy, dx) neighbour offsets in row-major order, center excluded."""
    _check_window(window)
    radius = window // 2
    return [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if (dy, dx) != (0, 0)
    ]


def _check_window(window: int) -> None:
    if window < 3 or window % 2 == 0:
        raise RejectedInputError(f"census window must be odd and >= 3, got {window}")


def _neighbours(values: np.ndarray, window: int) -> np.ndarray:
    """Zero-padded window neighbours of every pixel, center removed."""
    radius = window // 2
    height, width = values.shape
    padded = np.pad(values, radius)
    stacked = sliding_window_view(padded, (window, window)).reshape(height, width, window * window)
    return np.delete(stacked, (window * window) // 2, axis=2)


@lru_cache(maxsize=64)
def _channel_validity(height: int, width: int, window: int) -> np.ndarray:
    valid = _neighbours(np.ones((height, width)), window)
    valid.setflags(write=False)
    return valid


def census_of_intensity(
    values: np.ndarray,
    window: int = 7,
    soft_sign: Optional[float] = None,
) -> CensusFeatures:
    """Census features of an already-scaled single-channel intensity map."""
    _check_window(window)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise RejectedInputError(f"intensity map must be 2-D, got shape {values.shape}")
    validity = _channel_validity(values.shape[0], values.shape[1], window)
    # out-of-frame channels are zeroed; they never enter the distance
    differences = (values[:, :, None] - _neighbours(values, window)) * validity
    if soft_sign is None:
        features = differences
    else:
        features = differences / np.sqrt(soft_sign + differences * differences)
    return CensusFeatures(features, differences, validity, validity.mean(axis=2))


def census_transform(
    image: np.ndarray,
    window: int = 7,
    intensity_scale: float = 1.0,
    soft_sign: Optional[float] = None,
) -> CensusFeatures:
    """
    Census transform of an image.

    Feature k of pixel p is intensity(p) - intensity(p + offset_k) over the
    window minus its center. Out-of-frame neighbours are flagged in
    ``channel_validity`` and their features are 0.

    Args:
        image: H x W x C image, converted to the channel-mean intensity
        window: odd window size >= 3
        intensity_scale: multiplier applied to the intensity (255 for 8-bit units)
        soft_sign: optional c for the t / sqrt(c + t^2) squashing
    """
    _check_window(window)
    values = as_image(image).mean(axis=2) * intensity_scale
    return census_of_intensity(values, window, soft_sign)


def soft_hamming(
    features_a: np.ndarray,
    features_b: np.ndarray,
    saturation: float = 0.1,
    channel_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Per-pixel sum of d^2 / (saturation + d^2) over descriptor channels.

    Args:
        features_a, features_b: H x W x K descriptors of equal shape
        saturation: positive constant
        channel_mask: optional H x W x K weights (out-of-frame channels get 0)
    """
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.shape != b.shape:
        raise RejectedInputError(f"feature shapes differ: {a.shape} vs {b.shape}")
    sq = (a - b) ** 2
    terms = sq / (saturation + sq)
    if channel_mask is not None:
        terms = terms * channel_mask
    return terms.sum(axis=-1)


def charbonnier(
    a: np.ndarray,
    b: np.ndarray,
    eps: float = 0.001,
    alpha: float = 0.5,
) -> np.ndarray:
    """Generalized Charbonnier ((a - b)^2 + eps^2)^alpha, elementwise."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return (diff * diff + eps * eps) ** alpha


def charbonnier_grad(
    a: np.ndarray,
    b: np.ndarray,
    eps: float = 0.001,
    alpha: float = 0.5,
) -> np.ndarray:
    """Derivative of ``charbonnier`` wrt ``a``."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return 2.0 * alpha * diff * (diff * diff + eps * eps) ** (alpha - 1.0)
