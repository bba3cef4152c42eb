"""
Dense 2-D field primitives: sampling, warping, splatting, derivatives,
convolution, resizing and the finite-difference gradient checker.
"""

from pysmurf.fields.types import CropWindow, as_flow, as_image, as_mask, intensity, pixel_grid
from pysmurf.fields.sampling import (
    SampleResult,
    backward_warp,
    backward_warp_with_grad,
    bilinear_sample,
    bilinear_sample_with_grad,
    forward_splat_count,
    warp_coordinates,
)
from pysmurf.fields.derivatives import spatial_derivative, spatial_derivative_adjoint
from pysmurf.fields.conv import ConvGrads, conv2d, conv2d_backward
from pysmurf.fields.resample import resize_flow, resize_image
from pysmurf.fields.gradcheck import GradCheckReport, finite_difference_check, relative_error

__all__ = [
    "CropWindow",
    "as_flow",
    "as_image",
    "as_mask",
    "intensity",
    "pixel_grid",
    "SampleResult",
    "backward_warp",
    "backward_warp_with_grad",
    "bilinear_sample",
    "bilinear_sample_with_grad",
    "forward_splat_count",
    "warp_coordinates",
    "spatial_derivative",
    "spatial_derivative_adjoint",
    "ConvGrads",
    "conv2d",
    "conv2d_backward",
    "resize_flow",
    "resize_image",
    "GradCheckReport",
    "finite_difference_check",
    "relative_error",
]
