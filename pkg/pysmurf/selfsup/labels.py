"""
Label generation: two-frame student/teacher labels, multi-frame inpainted
labels, and weighted mixing of label sources.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.types import as_image
from pysmurf.objectives.objective import LossInputs
from pysmurf.occlusion import estimate_occlusion
from pysmurf.selfsup.augment import (
    AugmentConfig,
    AugmentRecord,
    augment_pair,
    geometric_frame,
    transform_flow_label,
)
from pysmurf.selfsup.inversion import (
    InversionTrainingConfig,
    TinyInversionModel,
    inpaint_occluded_flow,
    train_inversion_model,
)
from pysmurf.selfsup.types import SelfSupLabel
from pysmurf.solver.config import SolverConfig
from pysmurf.solver.solver import FlowSolver, SolveResult, evaluate_sequence

logger = logging.getLogger("pysmurf.selfsup")

Estimator = Union[FlowSolver, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _teacher_flow(estimator: Estimator, image1: np.ndarray, image2: np.ndarray) -> np.ndarray:
    if isinstance(estimator, FlowSolver):
        return estimator.solve(image1, image2).flow
    result = estimator(image1, image2)
    final = getattr(result, "final", None)
    if final is None:
        final = getattr(result, "flow", result)
    return np.asarray(final, dtype=np.float64)


def generate_selfsup_label(
    image1: np.ndarray,
    image2: np.ndarray,
    estimator: Estimator,
    record: AugmentRecord,
) -> SelfSupLabel:
    """
    Run the teacher on the clean full frames and carry its final iterate
    into the student geometry described by ``record``.

    Args:
        image1, image2: un-augmented full frames
        estimator: FlowSolver, or any callable (image1, image2) returning a
            flow, a FlowSequence or a SolveResult
        record: the student's augmentation

    Returns:
        two-frame SelfSupLabel on the student crop
    """
    teacher = _teacher_flow(estimator, as_image(image1, "image1"), as_image(image2, "image2"))
    label = transform_flow_label(teacher, record)
    return SelfSupLabel(label.flow, label.valid, "two_frame", {**label.metadata, "seed": record.seed})


@dataclass(frozen=True)
class StudentTeacherResult:
    """One student/teacher round."""
    label: SelfSupLabel
    student: SolveResult
    record: AugmentRecord
    sequence_loss: float

    def to_dict(self) -> dict:
        return {
            "label": self.label.to_dict(),
            "student": self.student.to_dict(),
            "sequence_loss": self.sequence_loss,
        }


def run_student_teacher(
    image1: np.ndarray,
    image2: np.ndarray,
    config: Optional[SolverConfig] = None,
    record: Optional[AugmentRecord] = None,
    augment: Optional[AugmentConfig] = None,
    crop_size: Optional[Tuple[int, int]] = None,
    teacher: Optional[Estimator] = None,
) -> StudentTeacherResult:
    """
    Teacher on the clean full pair, student on the augmented crop.

    The student solves with full-image warping inside its scaled/flipped
    frame, supervised by the transformed teacher label; every recorded
    student iterate is then scored with the sequence-weighted objective.

    Args:
        image1, image2: clean full frames
        config: solver configuration for teacher and student
        record: augmentation to replay (drawn from ``augment`` when omitted)
        augment: ranges for drawing a record
        crop_size: student crop (height, width) when drawing a record
        teacher: estimator for the label (a FlowSolver on ``config`` by default)
    """
    config = config or SolverConfig()
    augment = augment or AugmentConfig()
    img1 = as_image(image1, "image1")
    img2 = as_image(image2, "image2")
    if record is None:
        record = AugmentRecord.sample(img1.shape[:2], augment, crop_size, seed=config.seed)

    label = generate_selfsup_label(img1, img2, teacher or FlowSolver(config), record)

    frame1 = geometric_frame(img1, record)
    frame2 = geometric_frame(img2, record)
    edge = record.crop.apply(frame1)
    if augment.augment_data_term:
        inputs = augment_pair(img1, img2, record).inputs
        # the eraser acts on the crop; write it back into the full student frame
        frame2 = frame2.copy()
        c = record.crop
        frame2[c.y_offset:c.y_offset + c.height, c.x_offset:c.x_offset + c.width] = inputs[1]
        student_image1 = inputs[0]
    else:
        student_image1 = edge

    student = FlowSolver(config).solve(
        student_image1, frame2, crop=record.crop, label=label, edge_image=edge, image1_full=frame1
    )
    sequence_loss = evaluate_sequence(
        student.sequence,
        LossInputs(edge, frame2, crop=record.crop, occlusion=student.occlusion, label=label.flow),
        config.weights,
        config.photometric,
    )
    return StudentTeacherResult(label, student, record, sequence_loss)


@dataclass(frozen=True)
class MultiFrameResult:
    """A multi-frame label and the pieces it was built from."""
    label: SelfSupLabel
    forward: np.ndarray = field(repr=False)
    backward: np.ndarray = field(repr=False)
    occlusion: np.ndarray = field(repr=False)
    model: TinyInversionModel = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "label": self.label.to_dict(),
            "occluded_fraction": float(1.0 - self.occlusion.mean()),
            "model": self.model.to_dict(),
        }


def generate_multiframe_label(
    frame_prev: np.ndarray,
    frame_t: np.ndarray,
    frame_next: np.ndarray,
    config: Optional[SolverConfig] = None,
    training: Optional[InversionTrainingConfig] = None,
) -> MultiFrameResult:
    """
    Inpainted forward-flow label for the middle frame of a triplet.

    Solves t -> t+1 (with its backward partner, for occlusion) and t -> t-1,
    trains a fresh inversion model on the visible forward flow, and fills
    the occluded pixels with its prediction.
    """
    config = config or SolverConfig()
    solver = FlowSolver(config)
    forward_result = solver.solve(frame_t, frame_next)
    backward_flow = solver.solve(frame_t, frame_prev).flow
    forward_flow = forward_result.flow

    occlusion = forward_result.occlusion
    if forward_result.backward is not None:
        occlusion = estimate_occlusion(forward_flow, forward_result.backward, config.occlusion)
    model = train_inversion_model(backward_flow, forward_flow, occlusion, training)
    label = inpaint_occluded_flow(forward_flow, model, backward_flow, occlusion)
    return MultiFrameResult(label, forward_flow, backward_flow, occlusion, model)


def mix_label_keys(
    sources: Mapping[str, Sequence[str]],
    weights: Optional[Mapping[str, float]] = None,
    count: int = 0,
    seed: int = 0,
) -> List[Tuple[str, str]]:
    """
    Draw (source, key) pairs: the source by weight, then a key uniformly.

    Equal weights give the 50% mix of two sources.

    Args:
        sources: label keys per source name
        weights: sampling weight per source (equal when omitted)
        count: number of draws (total number of keys when 0)
        seed: RNG seed
    """
    names = sorted(name for name, keys in sources.items() if len(keys) > 0)
    if not names:
        raise RejectedInputError("no label keys to mix")
    raw: Dict[str, float] = {name: float((weights or {}).get(name, 1.0)) for name in names}
    if any(w < 0 for w in raw.values()) or sum(raw.values()) <= 0:
        raise RejectedInputError(f"mixing weights must be non-negative with a positive sum: {raw}")
    probabilities = np.array([raw[name] for name in names]) / sum(raw.values())
    count = count or sum(len(sources[name]) for name in names)

    rng = np.random.default_rng(seed)
    picks = []
    for source_index in rng.choice(len(names), size=count, p=probabilities):
        name = names[int(source_index)]
        keys = sources[name]
        picks.append((name, keys[int(rng.integers(0, len(keys)))]))
    return picks
