"""
Synthetic scenes with known flow: textured noise, translations, crops of
larger frames, moving squares, constant-velocity triplets and a strip
leaving the frame.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import cv2
import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.sampling import bilinear_sample
from pysmurf.fields.types import CropWindow, pixel_grid


def textured_noise(
    height: int,
    width: int,
    channels: int = 3,
    sigma: float = 1.5,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian-blurred uniform noise stretched to [0.1, 0.9]."""
    rng = np.random.default_rng(seed)
    noise = rng.random((height, width, channels))
    blurred = cv2.GaussianBlur(noise, (0, 0), sigmaX=sigma, borderType=cv2.BORDER_REFLECT)
    if blurred.ndim == 2:
        blurred = blurred[..., None]
    low, high = blurred.min(), blurred.max()
    return 0.1 + 0.8 * (blurred - low) / max(high - low, 1e-12)


def _shifted(texture: np.ndarray, height: int, width: int, x0: float, y0: float) -> np.ndarray:
    """height x width window of ``texture`` whose top-left sits at (x0, y0)."""
    xs, ys = pixel_grid(height, width)
    values, _ = bilinear_sample(texture, np.stack([xs + x0, ys + y0], axis=-1), "clamp")
    return values


@dataclass(frozen=True)
class SyntheticPair:
    """Two frames and the flow from the first to the second."""
    image1: np.ndarray = field(repr=False)
    image2: np.ndarray = field(repr=False)
    flow: np.ndarray = field(repr=False)
    crop: Optional[CropWindow] = None
    visible: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def image1_crop(self) -> np.ndarray:
        return self.crop.apply(self.image1) if self.crop is not None else self.image1


def translated_pair(
    height: int,
    width: int,
    shift: Tuple[float, float],
    seed: int = 0,
    margin: int = 8,
    channels: int = 3,
) -> SyntheticPair:
    """
    Frame 2 is frame 1 moved by ``shift`` = (u, v): I2(p + shift) = I1(p).

    Both frames are windows of one larger texture, so content enters and
    leaves at the borders instead of wrapping.
    """
    u, v = shift
    if max(abs(u), abs(v)) >= margin:
        raise RejectedInputError(f"shift {shift} must stay below the margin {margin}")
    texture = textured_noise(height + 2 * margin, width + 2 * margin, channels, seed=seed)
    image1 = texture[margin:margin + height, margin:margin + width].copy()
    image2 = _shifted(texture, height, width, margin - u, margin - v)
    flow = np.broadcast_to(np.array([u, v], dtype=np.float64), (height, width, 2)).copy()
    return SyntheticPair(image1, image2, flow)


def crop_scene(
    full_height: int,
    full_width: int,
    crop_size: Tuple[int, int],
    shift: Tuple[float, float],
    seed: int = 0,
) -> SyntheticPair:
    """
    A translated full-frame pair with a centred crop of frame 1.

    The returned flow lives on the crop grid.
    """
    height, width = crop_size
    full = translated_pair(full_height, full_width, shift, seed=seed)
    crop = CropWindow(
        (full_width - width) // 2, (full_height - height) // 2, height, width, full_height, full_width
    )
    return SyntheticPair(full.image1, full.image2, crop.apply(full.flow), crop)


def moving_square(
    size: int = 32,
    square: int = 10,
    shift: Tuple[int, int] = (3, 0),
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    A textured square moving by an integer ``shift`` over a static background.

    Returns:
        (forward flow, backward flow, frame-1 visibility, object mask of frame 1)
    """
    du, dv = shift
    top = left = (size - square) // 2
    obj1 = np.zeros((size, size), dtype=bool)
    obj1[top:top + square, left:left + square] = True
    obj2 = np.zeros_like(obj1)
    obj2[top + dv:top + dv + square, left + du:left + du + square] = True

    forward = np.zeros((size, size, 2))
    forward[obj1] = (du, dv)
    backward = np.zeros((size, size, 2))
    backward[obj2] = (-du, -dv)
    visible = (~(obj2 & ~obj1)).astype(np.float64)
    return forward, backward, visible, obj1


@dataclass(frozen=True)
class SyntheticTriplet:
    """Frames t-1, t, t+1 of a constant-velocity sequence."""
    frame_prev: np.ndarray = field(repr=False)
    frame_t: np.ndarray = field(repr=False)
    frame_next: np.ndarray = field(repr=False)
    forward: np.ndarray = field(repr=False)    # t -> t+1
    backward: np.ndarray = field(repr=False)   # t -> t-1
    visible: np.ndarray = field(repr=False)    # forward visibility of frame t


def constant_velocity_triplet(
    height: int,
    width: int,
    velocity: Tuple[float, float],
    seed: int = 0,
    margin: int = 8,
) -> SyntheticTriplet:
    """
    Three windows of one texture moving by ``velocity`` per frame.

    Forward-occluded pixels are those whose target leaves the frame.
    """
    u, v = velocity
    texture = textured_noise(height + 2 * margin, width + 2 * margin, seed=seed)
    frames = [_shifted(texture, height, width, margin - k * u, margin - k * v) for k in (-1, 0, 1)]
    xs, ys = pixel_grid(height, width)
    visible = ((xs + u >= 0) & (xs + u <= width - 1) & (ys + v >= 0) & (ys + v <= height - 1))
    forward = np.broadcast_to(np.array([u, v], dtype=np.float64), (height, width, 2)).copy()
    return SyntheticTriplet(frames[0], frames[1], frames[2], forward, -forward, visible.astype(np.float64))


def exiting_strip_triplet(
    height: int = 40,
    width: int = 40,
    speed: int = 4,
    rows: Tuple[int, int] = (16, 24),
    left: int = 12,
    seed: int = 0,
) -> SyntheticTriplet:
    """
    A textured strip moving right by ``speed`` pixels per frame over a
    static textured background, leaving through the right border.

    In frame t the strip covers ``rows`` from column ``left`` to the border;
    its last ``speed`` columns leave the frame by t+1, so they are the only
    forward-occluded pixels. In t-1 the same pixels were ``speed`` columns
    further left and fully visible.
    """
    top, bottom = rows
    if not (0 <= top < bottom <= height):
        raise RejectedInputError(f"strip rows {rows} must lie inside height {height}")
    if speed < 1 or not (speed <= left < width - speed):
        raise RejectedInputError(f"speed {speed} and left edge {left} leave no visible strip")
    background = textured_noise(height, width, seed=seed)
    strip = textured_noise(bottom - top, width - left + speed, seed=seed + 1)

    def frame(k: int) -> np.ndarray:
        image = background.copy()
        start = left + k * speed
        image[top:bottom, start:] = strip[:, : width - start]
        return image

    on_strip = np.zeros((height, width), dtype=bool)
    on_strip[top:bottom, left:] = True
    forward = np.zeros((height, width, 2))
    forward[on_strip] = (speed, 0.0)
    xs, _ = pixel_grid(height, width)
    visible = ~(on_strip & (xs + speed > width - 1))
    return SyntheticTriplet(frame(-1), frame(0), frame(1), forward, -forward, visible.astype(np.float64))
