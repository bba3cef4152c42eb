"""
Self-supervision: augmentation, student/teacher labels and multi-frame
inpainted labels.
"""

from pysmurf.selfsup.types import SelfSupLabel
from pysmurf.selfsup.augment import (
    AugmentConfig,
    AugmentedPair,
    AugmentRecord,
    augment_pair,
    erase_regions,
    geometric_augment,
    geometric_frame,
    photometric_augment,
    transform_flow_label,
)
from pysmurf.selfsup.inversion import (
    InversionTrainingConfig,
    TinyInversionModel,
    coordinate_channels,
    fit_inversion_model,
    inpaint_occluded_flow,
    inversion_loss,
    train_inversion_model,
)
from pysmurf.selfsup.labels import (
    MultiFrameResult,
    StudentTeacherResult,
    generate_multiframe_label,
    generate_selfsup_label,
    mix_label_keys,
    run_student_teacher,
)

__all__ = [
    "SelfSupLabel",
    "AugmentConfig",
    "AugmentedPair",
    "AugmentRecord",
    "augment_pair",
    "erase_regions",
    "geometric_augment",
    "geometric_frame",
    "photometric_augment",
    "transform_flow_label",
    "InversionTrainingConfig",
    "TinyInversionModel",
    "coordinate_channels",
    "fit_inversion_model",
    "inpaint_occluded_flow",
    "inversion_loss",
    "train_inversion_model",
    "MultiFrameResult",
    "StudentTeacherResult",
    "generate_multiframe_label",
    "generate_selfsup_label",
    "mix_label_keys",
    "run_student_teacher",
]
