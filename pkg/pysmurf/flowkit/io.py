"""
Flow and image file formats.

- Middlebury ``.flo``: float32 magic 202021.25, int32 width and height
  (little-endian), then row-major interleaved (u, v) float32.
- KITTI flow PNG: 16-bit, 3 channels; component = (stored - 2^15) / 64 and
  the third channel is validity.
- Images: 8/16-bit PNG and PPM through OpenCV, returned as RGB in [0, 1].
"""

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Tuple, Union

import cv2
import numpy as np

from pysmurf.errors import FlowFormatError, RejectedInputError
from pysmurf.fields.types import as_flow, as_image, as_mask

FLO_MAGIC = 202021.25
FLO_HEADER_BYTES = 12
KITTI_OFFSET = 2 ** 15
KITTI_SCALE = 64.0

PathLike = Union[str, Path]
FormatTag = Literal["flo", "kitti_png", "memory"]


@dataclass(frozen=True)
class FlowFileRecord:
    """A flow field, its validity mask and where it came from."""
    flow: np.ndarray = field(compare=False)
    valid: np.ndarray = field(compare=False)
    format: FormatTag = "memory"

    def __post_init__(self) -> None:
        flow = as_flow(self.flow)
        object.__setattr__(self, "flow", flow)
        object.__setattr__(self, "valid", as_mask(self.valid, flow.shape[:2], "valid"))

    @classmethod
    def from_flow(cls, flow: np.ndarray, format: FormatTag = "memory") -> "FlowFileRecord":
        flow = as_flow(flow)
        return cls(flow, np.ones(flow.shape[:2]), format)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.flow.shape[:2]


# ========================================
# MIDDLEBURY .flo
# ========================================

def read_flo(data: bytes) -> FlowFileRecord:
    """
    Decode ``.flo`` bytes.

    Raises:
        FlowFormatError: bad magic, bad dimensions or truncated payload
    """
    if len(data) < FLO_HEADER_BYTES:
        raise FlowFormatError(
            f"truncated header: expected {FLO_HEADER_BYTES} bytes, got {len(data)}", offset=len(data)
        )
    magic = np.frombuffer(data, "<f4", count=1, offset=0)[0]
    if magic != np.float32(FLO_MAGIC):
        raise FlowFormatError(f"bad magic {magic!r}, expected {FLO_MAGIC}", offset=0)
    width, height = (int(v) for v in np.frombuffer(data, "<i4", count=2, offset=4))
    if width <= 0 or height <= 0:
        raise FlowFormatError(f"invalid dimensions {width} x {height}", offset=4)
    expected = FLO_HEADER_BYTES + 8 * width * height
    if len(data) < expected:
        raise FlowFormatError(
            f"truncated payload: expected {expected} bytes, got {len(data)}", offset=len(data)
        )
    flow = np.frombuffer(data, "<f4", count=2 * width * height, offset=FLO_HEADER_BYTES)
    flow = flow.reshape(height, width, 2).astype(np.float64)
    if not np.all(np.isfinite(flow)):
        raise FlowFormatError("flow payload contains non-finite values", offset=FLO_HEADER_BYTES)
    return FlowFileRecord(flow, np.ones((height, width)), "flo")


def write_flo(record: Union[FlowFileRecord, np.ndarray]) -> bytes:
    """Encode a flow (or record) as ``.flo`` bytes; validity is not stored."""
    flow = record.flow if isinstance(record, FlowFileRecord) else as_flow(record)
    height, width = flow.shape[:2]
    header = struct.pack("<fii", FLO_MAGIC, width, height)
    return header + np.ascontiguousarray(flow, dtype="<f4").tobytes()


# ========================================
# KITTI 16-bit PNG
# ========================================

def read_kitti_png(data: bytes) -> FlowFileRecord:
    """
    Decode KITTI flow PNG bytes; invalid pixels read as zero flow.

    Raises:
        FlowFormatError: undecodable data, wrong bit depth or channel count
    """
    image = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise FlowFormatError("cannot decode KITTI flow PNG", offset=0)
    if image.dtype != np.uint16:
        raise FlowFormatError(f"KITTI flow PNG must be 16-bit, got {image.dtype}")
    if image.ndim != 3 or image.shape[2] != 3:
        raise FlowFormatError(f"KITTI flow PNG must have 3 channels, got shape {image.shape}")
    # OpenCV channel order is B, G, R = valid, v, u
    stored = image.astype(np.float64)
    valid = (image[..., 0] > 0).astype(np.float64)
    flow = np.stack(
        [(stored[..., 2] - KITTI_OFFSET) / KITTI_SCALE, (stored[..., 1] - KITTI_OFFSET) / KITTI_SCALE],
        axis=-1,
    )
    flow *= valid[..., None]
    return FlowFileRecord(flow, valid, "kitti_png")


def kitti_quantize(flow: np.ndarray) -> np.ndarray:
    """Stored 16-bit values for flow components (round to nearest)."""
    return np.clip(np.round(flow * KITTI_SCALE + KITTI_OFFSET), 0, 65535).astype(np.uint16)


def write_kitti_png(record: Union[FlowFileRecord, np.ndarray]) -> bytes:
    """Encode a record as KITTI flow PNG bytes; validity is thresholded at 0.5."""
    if not isinstance(record, FlowFileRecord):
        record = FlowFileRecord.from_flow(record, "kitti_png")
    stored = kitti_quantize(record.flow)
    valid = (record.valid >= 0.5).astype(np.uint16)
    image = np.stack([valid, stored[..., 1], stored[..., 0]], axis=-1)
    ok, encoded = cv2.imencode(".png", image)
    if not ok:
        raise FlowFormatError("failed to encode KITTI flow PNG")
    return encoded.tobytes()


# ========================================
# FILES
# ========================================

def atomic_write(path: PathLike, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_flow_file(path: PathLike) -> FlowFileRecord:
    """Read ``.flo`` or KITTI ``.png`` flow, chosen by extension."""
    path = Path(path)
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".flo":
        return read_flo(data)
    if suffix == ".png":
        return read_kitti_png(data)
    raise FlowFormatError(f"unknown flow file extension '{suffix}' ({path})")


def write_flow_file(path: PathLike, record: Union[FlowFileRecord, np.ndarray]) -> None:
    """Write ``.flo`` or KITTI ``.png`` flow, chosen by extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".flo":
        atomic_write(path, write_flo(record))
    elif suffix == ".png":
        atomic_write(path, write_kitti_png(record))
    else:
        raise RejectedInputError(f"unknown flow file extension '{suffix}' ({path})")


def read_image(path: PathLike) -> np.ndarray:
    """Read an 8/16-bit PNG or PPM image as float64 RGB (or gray) in [0, 1]."""
    data = np.fromfile(str(path), dtype=np.uint8)
    image = cv2.imdecode(data, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise FlowFormatError(f"cannot decode image {path}")
    if image.dtype == np.uint8:
        scale = 255.0
    elif image.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FlowFormatError(f"unsupported image depth {image.dtype} in {path}")
    if image.ndim == 3 and image.shape[2] == 4:
        image = image[..., :3]
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
    return as_image(image.astype(np.float64) / scale, str(path))


def write_image(path: PathLike, image: np.ndarray, bit_depth: int = 8) -> None:
    """Write an RGB (or gray) [0, 1] image as 8- or 16-bit PNG/PPM."""
    if bit_depth not in (8, 16):
        raise RejectedInputError(f"bit_depth must be 8 or 16, got {bit_depth}")
    img = np.clip(as_image(image), 0.0, 1.0)
    if bit_depth == 8:
        stored = np.round(img * 255.0).astype(np.uint8)
    else:
        stored = np.round(img * 65535.0).astype(np.uint16)
    if stored.shape[2] == 3:
        stored = cv2.cvtColor(stored, cv2.COLOR_RGB2BGR)
    else:
        stored = stored[..., 0]
    suffix = Path(path).suffix.lower() or ".png"
    ok, encoded = cv2.imencode(suffix, stored)
    if not ok:
        raise FlowFormatError(f"failed to encode image as {suffix}")
    atomic_write(path, encoded.tobytes())


def write_mask_png(path: PathLike, mask: np.ndarray) -> None:
    """Write a [0, 1] mask as an 8-bit grayscale PNG."""
    arr = np.asarray(mask, dtype=np.float64)
    write_image(path, as_mask(arr, arr.shape[:2], "mask"), bit_depth=8)
