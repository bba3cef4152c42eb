"""
Array conventions shared by every pysmurf module.

Images are H x W x C arrays (C in {1, 3}) of intensities in [0, 1].
Flow fields are H x W x 2 arrays holding (u, v) = (x-offset, y-offset) in pixels.
Masks are H x W arrays in [0, 1] where 1 means visible / valid.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pysmurf.errors import RejectedInputError


def as_image(image: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an image and return it as a float64 H x W x C array."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise RejectedInputError(
            f"{name} must be H x W x C with C in {{1, 3}}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} contains non-finite values")
    return arr


def as_flow(flow: np.ndarray, name: str = "flow") -> np.ndarray:
    """Validate a flow field and return it as a float64 H x W x 2 array."""
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise RejectedInputError(f"{name} must be H x W x 2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise RejectedInputError(f"{name} contains non-finite values at {bad}")
    return arr


def as_mask(mask: np.ndarray, shape: Tuple[int, int], name: str = "mask") -> np.ndarray:
    """Validate a [0, 1] mask against the expected spatial shape."""
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.shape != tuple(shape):
        raise RejectedInputError(f"{name} shape {arr.shape} does not match {tuple(shape)}")
    if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
        raise RejectedInputError(f"{name} values must lie in [0, 1]")
    return arr


def intensity(image: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Single-channel intensity: channel mean times ``scale``."""
    return as_image(image).mean(axis=2) * scale


def pixel_grid(height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Integer pixel coordinates (xs, ys), each H x W, as float64."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    return xs, ys


@dataclass(frozen=True)
class CropWindow:
    """
    Position of a cropped frame inside its full frame.

    All quantities are in pixels of the full frame.
    """
    x_offset: int
    y_offset: int
    height: int
    width: int
    full_height: int
    full_width: int

    def __post_init__(self) -> None:
        dims = (self.height, self.width, self.full_height, self.full_width)
        if min(dims) <= 0:
            raise RejectedInputError(f"crop dimensions must be positive: {self}")
        if self.x_offset < 0 or self.y_offset < 0:
            raise RejectedInputError(f"crop offsets must be non-negative: {self}")
        if self.x_offset + self.width > self.full_width or self.y_offset + self.height > self.full_height:
            raise RejectedInputError(f"crop does not fit inside the full frame: {self}")

    @classmethod
    def full(cls, height: int, width: int) -> "CropWindow":
        """The trivial window covering a whole frame."""
        return cls(0, 0, height, width, height, width)

    @property
    def is_full(self) -> bool:
        return self.height == self.full_height and self.width == self.full_width

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def full_shape(self) -> Tuple[int, int]:
        return (self.full_height, self.full_width)

    def apply(self, array: np.ndarray) -> np.ndarray:
        """Cut this window out of a full-frame array."""
        if array.shape[:2] != self.full_shape:
            raise RejectedInputError(
                f"array shape {array.shape[:2]} does not match full frame {self.full_shape}"
            )
        return array[self.y_offset:self.y_offset + self.height,
                     self.x_offset:self.x_offset + self.width]

    def to_dict(self) -> dict:
        return {
            "x_offset": self.x_offset,
            "y_offset": self.y_offset,
            "height": self.height,
            "width": self.width,
            "full_height": self.full_height,
            "full_width": self.full_width,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CropWindow":
        return cls(**{k: int(v) for k, v in data.items()})
