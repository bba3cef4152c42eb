"""
Occlusion-aware census photometric loss with full-image warping.

The loss compares the census descriptor of frame 1 (on the crop) with the
descriptor of frame 2 warped by the flow. Frame 2 is sampled in full-frame
coordinates, so vectors leaving the crop but staying in the frame still see
real pixels. The occlusion mask is a constant: no gradient flows through it.
"""

from typing import Optional, Tuple

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.sampling import bilinear_sample_with_grad
from pysmurf.fields.types import CropWindow, as_flow, as_image, as_mask, pixel_grid
from pysmurf.objectives.census import census_of_intensity, census_offsets
from pysmurf.objectives.config import PhotometricConfig

# (a_x, b_x, a_y, b_y): target = a * (p + flow) + b, per axis
Affine = Tuple[float, float, float, float]


class PhotometricTerm:
    """
    Photometric loss for one image pair, with frame-1 census precomputed.

    Usage:
        term = PhotometricTerm(image1_crop, image2_full, crop=crop)
        loss, grad = term.evaluate(flow, occlusion)
    """

    def __init__(
        self,
        image1: np.ndarray,
        image2_full: np.ndarray,
        config: Optional[PhotometricConfig] = None,
        crop: Optional[CropWindow] = None,
        affine: Optional[Affine] = None,
    ):
        """
        Args:
            image1: frame 1 on the crop grid
            image2_full: frame 2, uncropped
            config: census constants
            crop: crop window relating the two (full frame when omitted)
            affine: explicit crop-to-frame mapping; overrides ``crop`` (pyramids)
        """
        self.config = config or PhotometricConfig()
        img1 = as_image(image1, "image1")
        img2 = as_image(image2_full, "image2_full")
        if affine is None:
            if crop is None:
                crop = CropWindow.full(*img1.shape[:2])
            if img1.shape[:2] != crop.shape:
                raise RejectedInputError(
                    f"image1 {img1.shape[:2]} does not match crop {crop.shape}"
                )
            if img2.shape[:2] != crop.full_shape:
                raise RejectedInputError(
                    f"image2_full {img2.shape[:2]} does not match crop full frame {crop.full_shape}"
                )
            affine = (1.0, float(crop.x_offset), 1.0, float(crop.y_offset))
        self.affine = affine
        self.shape = img1.shape[:2]

        scale = self.config.intensity_scale
        self._census1 = census_of_intensity(
            img1.mean(axis=2) * scale, self.config.census_window, self.config.soft_sign
        )
        self._target = img2.mean(axis=2, keepdims=True) * scale
        self._offsets = census_offsets(self.config.census_window)
        self._grid = pixel_grid(*self.shape)

    @property
    def border_validity(self) -> np.ndarray:
        return self._census1.border_validity

    def warp_intensity(self, flow: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Warped frame-2 intensity on the crop grid, with its Jacobian."""
        ax, bx, ay, by = self.affine
        xs, ys = self._grid
        sample = bilinear_sample_with_grad(
            self._target,
            ax * (xs + flow[..., 0]) + bx,
            ay * (ys + flow[..., 1]) + by,
            "zero",
        )
        return sample.values[..., 0], sample.d_dx[..., 0] * ax, sample.d_dy[..., 0] * ay

    def evaluate(
        self,
        flow: np.ndarray,
        occlusion: Optional[np.ndarray] = None,
        with_grad: bool = True,
    ) -> Tuple[float, Optional[np.ndarray]]:
        """
        Args:
            flow: h x w x 2 flow on the crop grid
            occlusion: h x w mask, 1 = visible (all visible when omitted)
            with_grad: skip the gradient when False

        Returns:
            (scalar loss, h x w x 2 gradient or None)
        """
        flow = as_flow(flow)
        if flow.shape[:2] != self.shape:
            raise RejectedInputError(f"flow {flow.shape[:2]} does not match crop {self.shape}")
        mask = np.ones(self.shape) if occlusion is None else as_mask(occlusion, self.shape, "occlusion")
        cfg = self.config

        warped, d_dx, d_dy = self.warp_intensity(flow)
        census2 = census_of_intensity(warped, cfg.census_window, cfg.soft_sign)
        valid = self._census1.channel_validity

        d = self._census1.features - census2.features
        sq = d * d
        hamming = (valid * sq / (cfg.saturation + sq)).sum(axis=2)
        base = hamming * hamming + cfg.distance_eps ** 2
        rho = base ** cfg.distance_alpha

        weight = mask * self._census1.border_validity
        if cfg.normalization == "mask":
            denom = float(weight.sum())
            if denom <= 0.0:
                return 0.0, (np.zeros_like(flow) if with_grad else None)
        else:
            denom = float(weight.size)
        loss = float((weight * rho).sum() / denom)
        if not with_grad:
            return loss, None

        d_rho = 2.0 * cfg.distance_alpha * hamming * base ** (cfg.distance_alpha - 1.0)
        d_hamming = weight * d_rho / denom
        # dL/d(feature2): feature2 enters d with a minus sign
        d_feat = -d_hamming[..., None] * valid * 2.0 * d * cfg.saturation / (cfg.saturation + sq) ** 2
        if cfg.soft_sign is not None:
            t = census2.differences
            d_feat = d_feat * cfg.soft_sign / (cfg.soft_sign + t * t) ** 1.5

        # difference_k(p) = J(p) - J(p + o_k)
        radius = cfg.census_window // 2
        height, width = self.shape
        scattered = np.zeros((height + 2 * radius, width + 2 * radius))
        for k, (dy, dx) in enumerate(self._offsets):
            scattered[radius + dy:radius + dy + height, radius + dx:radius + dx + width] += d_feat[..., k]
        d_warped = d_feat.sum(axis=2) - scattered[radius:radius + height, radius:radius + width]

        grad = np.stack([d_warped * d_dx, d_warped * d_dy], axis=-1)
        return loss, grad


def photometric_loss(
    image1_crop: np.ndarray,
    image2_full: np.ndarray,
    crop: CropWindow,
    flow: np.ndarray,
    occlusion: Optional[np.ndarray] = None,
    config: Optional[PhotometricConfig] = None,
) -> Tuple[float, np.ndarray]:
    """
    Mean occlusion-masked Charbonnier of the census distance between frame 1
    and frame 2 warped by ``flow``.

    Pass ``CropWindow.full(h, w)`` for plain (non-cropped) warping.

    Returns:
        (scalar loss, gradient wrt flow)
    """
    term = PhotometricTerm(image1_crop, image2_full, config=config, crop=crop)
    loss, grad = term.evaluate(flow, occlusion)
    return loss, grad
