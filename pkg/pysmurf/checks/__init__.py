"""
Synthetic scenes and the gradient / acceptance suites.
"""

from pysmurf.checks.synthetic import (
    SyntheticPair,
    SyntheticTriplet,
    constant_velocity_triplet,
    crop_scene,
    exiting_strip_triplet,
    moving_square,
    textured_noise,
    translated_pair,
)
from pysmurf.checks.suites import (
    AcceptanceSettings,
    CheckResult,
    SuiteReport,
    acceptance_suite,
    check_determinism,
    check_full_image_warping,
    check_inversion_training,
    check_loss_identities,
    check_metrics_and_formats,
    check_multiframe_inpainting,
    check_occlusion_estimators,
    check_translation_oracle,
    gradient_suite,
    kink_free_flow,
)

__all__ = [
    "SyntheticPair",
    "SyntheticTriplet",
    "constant_velocity_triplet",
    "crop_scene",
    "exiting_strip_triplet",
    "moving_square",
    "textured_noise",
    "translated_pair",
    "AcceptanceSettings",
    "CheckResult",
    "SuiteReport",
    "acceptance_suite",
    "check_determinism",
    "check_full_image_warping",
    "check_inversion_training",
    "check_loss_identities",
    "check_metrics_and_formats",
    "check_multiframe_inpainting",
    "check_occlusion_estimators",
    "check_translation_oracle",
    "gradient_suite",
    "kink_free_flow",
]
