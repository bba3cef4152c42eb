"""
Bilinear sampling, backward warping and forward splatting.

Out-of-bounds handling follows two policies:
- "zero": neighbours outside the frame contribute 0 (default)
- "clamp": neighbour indices are clamped to the frame (border replication)

Validity is always the fraction of interpolation mass that falls inside the
frame, so it is 1 fully inside, 0 fully outside and fractional at the border.
"""

from typing import Literal, NamedTuple, Optional, Tuple

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.types import CropWindow, as_flow, as_image, pixel_grid

Policy = Literal["zero", "clamp"]


class SampleResult(NamedTuple):
    """Sampled values plus their analytic derivatives wrt the coordinates."""
    values: np.ndarray     # h x w x C
    validity: np.ndarray   # h x w
    d_dx: np.ndarray       # h x w x C
    d_dy: np.ndarray       # h x w x C


def _check_policy(policy: str) -> None:
    if policy not in ("zero", "clamp"):
        raise RejectedInputError(f"unknown out-of-bounds policy '{policy}'")


def bilinear_sample_with_grad(
    image: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    policy: Policy = "zero",
) -> SampleResult:
    """
    Sample ``image`` at real-valued coordinates and differentiate the result.

    Args:
        image: H x W x C (or H x W) array
        xs, ys: target coordinates, any common shape (h, w)
        policy: "zero" or "clamp"

    Returns:
        SampleResult with values, validity and per-channel d/dx, d/dy
    """
    _check_policy(policy)
    img = as_image(image)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise RejectedInputError(f"coordinate shapes differ: {xs.shape} vs {ys.shape}")
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not np.all(finite):
        bad = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise RejectedInputError(f"non-finite sampling coordinate at {bad}")

    height, width, _ = img.shape
    x0f = np.floor(xs)
    y0f = np.floor(ys)
    fx = (xs - x0f)[..., None]
    fy = (ys - y0f)[..., None]
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    x1 = x0 + 1
    y1 = y0 + 1

    in_x0 = (x0 >= 0) & (x0 < width)
    in_x1 = (x1 >= 0) & (x1 < width)
    in_y0 = (y0 >= 0) & (y0 < height)
    in_y1 = (y1 >= 0) & (y1 < height)

    cx0 = np.clip(x0, 0, width - 1)
    cx1 = np.clip(x1, 0, width - 1)
    cy0 = np.clip(y0, 0, height - 1)
    cy1 = np.clip(y1, 0, height - 1)

    v00 = img[cy0, cx0]
    v10 = img[cy0, cx1]
    v01 = img[cy1, cx0]
    v11 = img[cy1, cx1]

    if policy == "zero":
        v00 = v00 * (in_x0 & in_y0)[..., None]
        v10 = v10 * (in_x1 & in_y0)[..., None]
        v01 = v01 * (in_x0 & in_y1)[..., None]
        v11 = v11 * (in_x1 & in_y1)[..., None]

    gx = 1.0 - fx
    gy = 1.0 - fy
    values = gy * (gx * v00 + fx * v10) + fy * (gx * v01 + fx * v11)
    d_dx = gy * (v10 - v00) + fy * (v11 - v01)
    d_dy = gx * (v01 - v00) + fx * (v11 - v10)

    frac_x = gx[..., 0] * in_x0 + fx[..., 0] * in_x1
    frac_y = gy[..., 0] * in_y0 + fy[..., 0] * in_y1
    validity = frac_x * frac_y

    return SampleResult(values, validity, d_dx, d_dy)


def bilinear_sample(
    image: np.ndarray,
    coords: np.ndarray,
    policy: Policy = "zero",
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinearly sample an image at per-pixel (x, y) targets.

    Args:
        image: H x W x C image
        coords: h x w x 2 array of (x, y) coordinates
        policy: "zero" (zero padding) or "clamp"

    Returns:
        (sampled h x w x C image, h x w validity mask)
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 3 or coords.shape[2] != 2:
        raise RejectedInputError(f"coords must be h x w x 2, got {coords.shape}")
    result = bilinear_sample_with_grad(image, coords[..., 0], coords[..., 1], policy)
    return result.values, result.validity


def warp_coordinates(
    flow: np.ndarray,
    crop: Optional[CropWindow] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Absolute sampling coordinates p + flow(p), offset into the full frame."""
    flow = as_flow(flow)
    height, width, _ = flow.shape
    xs, ys = pixel_grid(height, width)
    ox = crop.x_offset if crop is not None else 0
    oy = crop.y_offset if crop is not None else 0
    return xs + flow[..., 0] + ox, ys + flow[..., 1] + oy


def _check_warp_dims(image: np.ndarray, flow: np.ndarray, crop: Optional[CropWindow]) -> None:
    if crop is None:
        if image.shape[:2] != flow.shape[:2]:
            raise RejectedInputError(
                f"image {image.shape[:2]} and flow {flow.shape[:2]} dimensions differ"
            )
        return
    if image.shape[:2] != crop.full_shape:
        raise RejectedInputError(
            f"image {image.shape[:2]} does not match crop full frame {crop.full_shape}"
        )
    if flow.shape[:2] != crop.shape:
        raise RejectedInputError(f"flow {flow.shape[:2]} does not match crop {crop.shape}")


def backward_warp_with_grad(
    image: np.ndarray,
    flow: np.ndarray,
    policy: Policy = "zero",
    crop: Optional[CropWindow] = None,
) -> SampleResult:
    """Backward warp returning the Jacobian wrt (u, v) alongside the values."""
    img = as_image(image)
    flow = as_flow(flow)
    _check_warp_dims(img, flow, crop)
    xs, ys = warp_coordinates(flow, crop)
    return bilinear_sample_with_grad(img, xs, ys, policy)


def backward_warp(
    image: np.ndarray,
    flow: np.ndarray,
    policy: Policy = "zero",
    crop: Optional[CropWindow] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reconstruct frame 1 by sampling ``image`` at p + flow(p).

    When ``crop`` is given, ``flow`` lives on the crop and ``image`` is the
    uncropped frame (full-image warping).

    Returns:
        (warped image, validity mask), both on the flow's grid
    """
    result = backward_warp_with_grad(image, flow, policy, crop)
    return result.values, result.validity


def forward_splat_count(flow: np.ndarray) -> np.ndarray:
    """
    Range map: bilinear forward splat of unit mass from every source pixel.

    Mass landing outside the frame is discarded.

    Returns:
        H x W array of accumulated coverage
    """
    flow = as_flow(flow)
    height, width, _ = flow.shape
    xs, ys = pixel_grid(height, width)
    tx = (xs + flow[..., 0]).ravel()
    ty = (ys + flow[..., 1]).ravel()
    x0 = np.floor(tx)
    y0 = np.floor(ty)
    fx = tx - x0
    fy = ty - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    counts = np.zeros(height * width, dtype=np.float64)
    corners = (
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    )
    for cx, cy, weight in corners:
        inside = (cx >= 0) & (cx < width) & (cy >= 0) & (cy < height)
        index = cy[inside] * width + cx[inside]
        counts += np.bincount(index, weights=weight[inside], minlength=height * width)
    return counts.reshape(height, width)
