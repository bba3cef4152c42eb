"""
Self-supervision loss: Charbonnier between a frozen teacher label and the
student flow.
"""

from typing import Optional, Tuple

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.types import as_flow, as_mask
from pysmurf.objectives.census import charbonnier, charbonnier_grad

FbMasks = Tuple[np.ndarray, np.ndarray]


def self_supervision_loss(
    teacher: np.ndarray,
    student: np.ndarray,
    masking: Optional[FbMasks] = None,
    eps: float = 0.001,
    alpha: float = 0.5,
    normalization: str = "mean",
) -> Tuple[float, np.ndarray]:
    """
    Mean Charbonnier between teacher and student over pixels and channels.

    Args:
        teacher: label flow, treated as a constant
        student: flow being optimised
        masking: optional (teacher_mask, student_mask); each pixel is then
            weighted by teacher_mask * (1 - student_mask)
        eps, alpha: Charbonnier constants
        normalization: "mean" over all entries or "mask" over the weight sum

    Returns:
        (scalar loss, gradient wrt student)
    """
    teacher = as_flow(teacher, "teacher")
    student = as_flow(student, "student")
    if teacher.shape != student.shape:
        raise RejectedInputError(
            f"teacher {teacher.shape[:2]} and student {student.shape[:2]} dimensions differ"
        )
    if normalization not in ("mean", "mask"):
        raise RejectedInputError(f"normalization must be 'mean' or 'mask', got {normalization}")

    shape = student.shape[:2]
    if masking is None:
        weight = np.ones(shape)
    else:
        teacher_mask, student_mask = masking
        weight = as_mask(teacher_mask, shape, "teacher_mask") * (
            1.0 - as_mask(student_mask, shape, "student_mask")
        )

    if normalization == "mask":
        denom = 2.0 * float(weight.sum())
        if denom <= 0.0:
            return 0.0, np.zeros_like(student)
    else:
        denom = float(student.size)

    penalty = charbonnier(student, teacher, eps, alpha)
    loss = float((weight[..., None] * penalty).sum() / denom)
    grad = weight[..., None] * charbonnier_grad(student, teacher, eps, alpha) / denom
    return loss, grad
