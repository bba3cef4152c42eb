"""
Augmentation with a replayable record.

Fixed order: photometric -> scale/stretch -> flips -> crop -> eraser. The
AugmentRecord holds every parameter, so the same record replays the same
transform on images and on flow labels.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import cv2
import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.resample import resize_flow, resize_image
from pysmurf.fields.types import CropWindow, as_flow, as_image, as_mask
from pysmurf.selfsup.types import SelfSupLabel

# (x, y, height, width) in student-frame pixels
Rect = Tuple[int, int, int, int]


@dataclass(frozen=True)
class AugmentConfig:
    """Ranges the random record is drawn from."""
    hue_max: float = 0.1                  # fraction of the colour wheel
    brightness: float = 0.3               # gain drawn from [1 - b, 1 + b]
    saturation: float = 0.3               # gain drawn from [1 - s, 1 + s]
    scale_range: Tuple[float, float] = (0.8, 1.2)
    max_stretch: float = 0.1              # relative x/y scale difference
    flip_lr_prob: float = 0.5
    flip_ud_prob: float = 0.1
    eraser_prob: float = 0.5
    eraser_max_rects: int = 3
    eraser_max_fraction: float = 0.05     # max rect area / crop area
    augment_data_term: bool = False

    def __post_init__(self) -> None:
        low, high = self.scale_range
        if not 0.0 < low <= high:
            raise RejectedInputError(f"scale_range must satisfy 0 < low <= high: {self.scale_range}")
        if not 0.0 <= self.hue_max <= 0.5:
            raise RejectedInputError(f"hue_max must lie in [0, 0.5], got {self.hue_max}")
        for name in ("brightness", "saturation", "max_stretch"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise RejectedInputError(f"{name} must lie in [0, 1), got {getattr(self, name)}")
        for name in ("flip_lr_prob", "flip_ud_prob", "eraser_prob", "eraser_max_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise RejectedInputError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.eraser_max_rects < 0:
            raise RejectedInputError("eraser_max_rects must be non-negative")


@dataclass(frozen=True)
class AugmentRecord:
    """Every parameter of one augmentation draw."""
    source_height: int
    source_width: int
    crop: CropWindow
    flip_lr: bool = False
    flip_ud: bool = False
    scale_x: float = 1.0
    scale_y: float = 1.0
    hue_shift: float = 0.0
    brightness: float = 1.0
    saturation: float = 1.0
    erase_rects: Tuple[Rect, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scale_x <= 0 or self.scale_y <= 0:
            raise RejectedInputError(f"scale factors must be positive: {self.scale_x}, {self.scale_y}")
        if self.crop.full_shape != self.scaled_shape:
            raise RejectedInputError(
                f"crop frame {self.crop.full_shape} does not match scaled frame {self.scaled_shape}"
            )
        for x, y, h, w in self.erase_rects:
            if min(x, y, h, w) < 0 or x + w > self.crop.width or y + h > self.crop.height:
                raise RejectedInputError(f"eraser rect {(x, y, h, w)} lies outside the crop")

    @property
    def scaled_shape(self) -> Tuple[int, int]:
        return (
            max(1, int(round(self.source_height * self.scale_y))),
            max(1, int(round(self.source_width * self.scale_x))),
        )

    @property
    def is_geometric_identity(self) -> bool:
        return (
            self.scaled_shape == (self.source_height, self.source_width)
            and not (self.flip_lr or self.flip_ud)
            and self.crop.is_full
        )

    @classmethod
    def identity(cls, height: int, width: int, seed: int = 0) -> "AugmentRecord":
        """A record that leaves images and labels unchanged."""
        return cls(height, width, CropWindow.full(height, width), seed=seed)

    @classmethod
    def sample(
        cls,
        shape: Tuple[int, int],
        config: Optional[AugmentConfig] = None,
        crop_size: Optional[Tuple[int, int]] = None,
        seed: int = 0,
    ) -> "AugmentRecord":
        """
        Draw a record for a frame of ``shape``.

        Scales are raised where needed so a ``crop_size`` crop always fits.
        """
        config = config or AugmentConfig()
        rng = np.random.default_rng(seed)
        height, width = int(shape[0]), int(shape[1])
        crop_h, crop_w = crop_size or (height, width)

        scale = rng.uniform(*config.scale_range)
        stretch = rng.uniform(-config.max_stretch, config.max_stretch)
        scale_x = max(scale * (1.0 + stretch), crop_w / width)
        scale_y = max(scale, crop_h / height)
        scaled_h = max(1, int(round(height * scale_y)))
        scaled_w = max(1, int(round(width * scale_x)))
        if crop_h > scaled_h or crop_w > scaled_w:
            raise RejectedInputError(f"crop {crop_size} does not fit frame {(scaled_h, scaled_w)}")
        crop = CropWindow(
            int(rng.integers(0, scaled_w - crop_w + 1)),
            int(rng.integers(0, scaled_h - crop_h + 1)),
            crop_h, crop_w, scaled_h, scaled_w,
        )

        flip_lr = bool(rng.random() < config.flip_lr_prob)
        flip_ud = bool(rng.random() < config.flip_ud_prob)
        hue_shift = float(rng.uniform(-config.hue_max, config.hue_max))
        brightness = float(rng.uniform(1.0 - config.brightness, 1.0 + config.brightness))
        saturation = float(rng.uniform(1.0 - config.saturation, 1.0 + config.saturation))

        rects = []
        if config.eraser_max_rects > 0 and rng.random() < config.eraser_prob:
            side_h = max(1, int(crop_h * np.sqrt(config.eraser_max_fraction)))
            side_w = max(1, int(crop_w * np.sqrt(config.eraser_max_fraction)))
            for _ in range(int(rng.integers(1, config.eraser_max_rects + 1))):
                h = int(rng.integers(1, side_h + 1))
                w = int(rng.integers(1, side_w + 1))
                rects.append((int(rng.integers(0, crop_w - w + 1)), int(rng.integers(0, crop_h - h + 1)), h, w))

        return cls(
            height, width, crop, flip_lr, flip_ud, float(scale_x), float(scale_y),
            hue_shift, brightness, saturation, tuple(rects), seed,
        )

    def to_dict(self) -> dict:
        return {
            "source_height": self.source_height,
            "source_width": self.source_width,
            "crop": self.crop.to_dict(),
            "flip_lr": self.flip_lr,
            "flip_ud": self.flip_ud,
            "scale_x": self.scale_x,
            "scale_y": self.scale_y,
            "hue_shift": self.hue_shift,
            "brightness": self.brightness,
            "saturation": self.saturation,
            "erase_rects": [list(r) for r in self.erase_rects],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentRecord":
        return cls(
            int(data["source_height"]),
            int(data["source_width"]),
            CropWindow.from_dict(data["crop"]),
            bool(data["flip_lr"]),
            bool(data["flip_ud"]),
            float(data["scale_x"]),
            float(data["scale_y"]),
            float(data["hue_shift"]),
            float(data["brightness"]),
            float(data["saturation"]),
            tuple(tuple(int(v) for v in r) for r in data.get("erase_rects", [])),
            int(data.get("seed", 0)),
        )


class AugmentedPair(NamedTuple):
    """``inputs`` carry every augmentation; ``clean`` only the geometry."""
    inputs: Tuple[np.ndarray, np.ndarray]
    clean: Tuple[np.ndarray, np.ndarray]


# ========================================
# PHOTOMETRIC
# ========================================

def photometric_augment(image: np.ndarray, record: AugmentRecord, clamp: bool = True) -> np.ndarray:
    """
    Hue shift and saturation gain in HSV, then a brightness gain.

    Single-channel images only get the brightness gain.
    """
    out = as_image(image).copy()
    if out.shape[2] == 3 and (record.hue_shift != 0.0 or record.saturation != 1.0):
        hsv = cv2.cvtColor(np.clip(out, 0.0, 1.0).astype(np.float32), cv2.COLOR_RGB2HSV)
        hsv[..., 0] = np.mod(hsv[..., 0] + 360.0 * record.hue_shift, 360.0)
        hsv[..., 1] = np.clip(hsv[..., 1] * record.saturation, 0.0, 1.0)
        out = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB).astype(np.float64)
    if record.brightness != 1.0:
        out = out * record.brightness
    return np.clip(out, 0.0, 1.0) if clamp else out


def erase_regions(image: np.ndarray, rects: Sequence[Rect]) -> np.ndarray:
    """Fill each (x, y, height, width) rect with the image's mean colour."""
    out = as_image(image).copy()
    mean = out.reshape(-1, out.shape[2]).mean(axis=0)
    for x, y, h, w in rects:
        out[y:y + h, x:x + w] = mean
    return out


# ========================================
# GEOMETRIC
# ========================================

def _apply_geometry(array: np.ndarray, record: AugmentRecord, is_flow: bool) -> np.ndarray:
    if array.shape[:2] != (record.source_height, record.source_width):
        raise RejectedInputError(
            f"array {array.shape[:2]} does not match record source frame "
            f"{(record.source_height, record.source_width)}"
        )
    out = array
    if record.scaled_shape != out.shape[:2]:
        out = resize_flow(out, record.scaled_shape) if is_flow else resize_image(out, record.scaled_shape)
    if record.flip_lr:
        out = out[:, ::-1].copy()
        if is_flow:
            out[..., 0] = -out[..., 0]
    if record.flip_ud:
        out = out[::-1].copy()
        if is_flow:
            out[..., 1] = -out[..., 1]
    return np.ascontiguousarray(record.crop.apply(out))


def geometric_augment(images: Sequence[np.ndarray], record: AugmentRecord) -> Tuple[np.ndarray, ...]:
    """Scale, flip and crop each image with the same record."""
    return tuple(_apply_geometry(as_image(img), record, is_flow=False) for img in images)


def geometric_frame(image: np.ndarray, record: AugmentRecord) -> np.ndarray:
    """Scale and flip only: the full student frame the crop is cut from."""
    full = AugmentRecord(
        record.source_height, record.source_width, CropWindow.full(*record.scaled_shape),
        record.flip_lr, record.flip_ud, record.scale_x, record.scale_y,
    )
    return _apply_geometry(as_image(image), full, is_flow=False)


def augment_pair(image1: np.ndarray, image2: np.ndarray, record: AugmentRecord) -> AugmentedPair:
    """Run the full pipeline; the eraser only touches the second image."""
    clean = geometric_augment((image1, image2), record)
    augmented = geometric_augment(
        (photometric_augment(image1, record), photometric_augment(image2, record)), record
    )
    second = erase_regions(augmented[1], record.erase_rects)
    return AugmentedPair((augmented[0], second), (clean[0], clean[1]))


def transform_flow_label(
    teacher_flow: np.ndarray,
    record: AugmentRecord,
    valid: Optional[np.ndarray] = None,
) -> SelfSupLabel:
    """
    Carry a full-frame teacher flow into the student's geometry.

    Scaling multiplies (u, v) by the realised size ratio, a horizontal flip
    negates u, a vertical flip negates v, and the crop selects the window.
    """
    flow = as_flow(teacher_flow, "teacher_flow")
    label_flow = _apply_geometry(flow, record, is_flow=True)
    if valid is None:
        label_valid = np.ones(label_flow.shape[:2])
    else:
        mask = as_mask(valid, flow.shape[:2], "valid")[..., None]
        label_valid = np.clip(_apply_geometry(mask, record, is_flow=False)[..., 0], 0.0, 1.0)
    return SelfSupLabel(label_flow, label_valid, "two_frame", {"augment": record.to_dict()})
