"""
FlowSolver - direct per-pair flow estimation by coarse-to-fine gradient
descent on the unsupervised objective.

Forward (frame 1 -> 2) and backward (frame 2 -> 1) flows are optimised
together because both occlusion estimators read the backward flow. The
occlusion masks are recomputed every ``recompute_every`` steps and held
fixed in between.
"""

import logging
import time
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from pysmurf.audit.logger import RunLogger
from pysmurf.errors import NumericalError, RejectedInputError
from pysmurf.fields.resample import resize_flow, resize_image
from pysmurf.fields.types import CropWindow, as_flow, as_image
from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.objectives.objective import BoundObjective, LossInputs, Objective
from pysmurf.objectives.photometric import Affine
from pysmurf.objectives.sequence import sequence_weighted_loss
from pysmurf.occlusion import estimate_occlusion
from pysmurf.plugins.base import EstimatorRegistry
from pysmurf.solver.adam import AdamState, adam_step
from pysmurf.solver.config import SolverConfig

logger = logging.getLogger("pysmurf.solver")


@dataclass(frozen=True)
class FlowSequence:
    """Recorded iterates, all at crop resolution; the last one is the estimate."""
    iterates: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.iterates:
            raise RejectedInputError("a flow sequence needs at least one iterate")
        shape = self.iterates[0].shape
        if any(it.shape != shape for it in self.iterates):
            raise RejectedInputError("all iterates of a flow sequence must share dimensions")

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def __len__(self) -> int:
        return len(self.iterates)

    def to_dict(self) -> dict:
        return {"length": len(self.iterates), "shape": list(self.final.shape[:2])}


@dataclass(frozen=True)
class SolveResult:
    """Everything one solve produces."""
    sequence: FlowSequence
    backward: Optional[np.ndarray]
    occlusion: np.ndarray
    history: Tuple[Tuple[float, ...], ...]
    crop: CropWindow
    latency_ms: float = 0.0

    @property
    def flow(self) -> np.ndarray:
        return self.sequence.final

    def to_dict(self) -> dict:
        return {
            **self.sequence.to_dict(),
            "crop": self.crop.to_dict(),
            "final_loss": [level[-1] for level in self.history],
            "occluded_fraction": float(1.0 - self.occlusion.mean()),
            "latency_ms": self.latency_ms,
        }


class _Level(NamedTuple):
    shape: Tuple[int, int]
    full_shape: Tuple[int, int]
    affine: Affine
    crop: CropWindow


class _Direction:
    """Optimisation state of one flow direction at one level."""

    def __init__(self, objective: BoundObjective, flow: np.ndarray):
        self.objective = objective
        self.flow = flow
        self.state = AdamState.zeros_like(flow)
        self.occlusion = np.ones(flow.shape[:2])


def _level_geometry(crop: CropWindow, config: SolverConfig) -> List[_Level]:
    """Per-level crop/frame sizes and the crop-to-frame sampling affine."""
    levels = []
    h, w = crop.shape
    full_h, full_w = crop.full_shape
    for index in range(config.levels):
        factor = config.downscale ** (config.levels - 1 - index)
        h_l = min(h, max(config.min_level_size, int(round(h / factor))))
        w_l = min(w, max(config.min_level_size, int(round(w / factor))))
        full_h_l = max(h_l, int(round(full_h * h_l / h)))
        full_w_l = max(w_l, int(round(full_w * w_l / w)))
        sx, sy = w_l / w, h_l / h
        fx, fy = full_w_l / full_w, full_h_l / full_h
        # pixel-center aligned: level crop pixel -> level full-frame pixel
        ax, ay = fx / sx, fy / sy
        affine = (
            ax,
            0.5 * ax + crop.x_offset * fx - 0.5,
            ay,
            0.5 * ay + crop.y_offset * fy - 0.5,
        )
        level_crop = CropWindow(
            min(int(round(crop.x_offset * fx)), full_w_l - w_l),
            min(int(round(crop.y_offset * fy)), full_h_l - h_l),
            h_l, w_l, full_h_l, full_w_l,
        )
        levels.append(_Level((h_l, w_l), (full_h_l, full_w_l), affine, level_crop))
    return levels


def _resize_to(image: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    if image.shape[:2] == tuple(shape):
        return image
    return resize_image(image, shape, area=True)


def _checkpoint_steps(steps: int, count: int) -> List[int]:
    return [int(round(x)) - 1 for x in np.linspace(0, steps, count + 1)[1:]]


class FlowSolver:
    """
    Coarse-to-fine flow solver.

    Usage:
        solver = FlowSolver(SolverConfig(steps=(200, 200, 300)))
        result = solver.solve(image1, image2)
        result.flow        # H x W x 2 estimate
        result.sequence    # recorded iterates
    """

    def __init__(
        self,
        config: Optional[SolverConfig] = None,
        registry: Optional[EstimatorRegistry] = None,
        run_logger: Optional[RunLogger] = None,
    ):
        self.config = config or SolverConfig()
        self.registry = registry or EstimatorRegistry()
        self._run_logger = run_logger
        self._objective = Objective(self.config.weights, self.config.photometric)

    def solve(
        self,
        image1: np.ndarray,
        image2_full: np.ndarray,
        crop: Optional[CropWindow] = None,
        label: Optional[np.ndarray] = None,
        edge_image: Optional[np.ndarray] = None,
        image1_full: Optional[np.ndarray] = None,
    ) -> SolveResult:
        """
        Estimate the flow of the crop of frame 1 into frame 2.

        Args:
            image1: frame 1, either the crop or the full frame
            image2_full: frame 2, full frame
            crop: crop window (full frame when omitted)
            label: frozen self-supervision label on the crop grid (array or
                anything with a ``flow`` attribute); used at the finest level
            edge_image: un-augmented crop for the smoothness edge weights
            image1_full: full frame 1 when ``image1`` is the crop; lets the
                backward flow use full-image warping too

        Returns:
            SolveResult

        Raises:
            NumericalError: if the loss or its gradient becomes non-finite
        """
        started = time.perf_counter()
        cfg = self.config
        img2 = as_image(image2_full, "image2_full")
        crop = crop or CropWindow.full(*img2.shape[:2])
        if img2.shape[:2] != crop.full_shape:
            raise RejectedInputError(
                f"image2_full {img2.shape[:2]} does not match crop full frame {crop.full_shape}"
            )
        img1 = as_image(image1, "image1")
        if img1.shape[:2] == crop.full_shape and not crop.is_full:
            image1_full = img1
            img1 = crop.apply(img1)
        elif img1.shape[:2] != crop.shape:
            raise RejectedInputError(f"image1 {img1.shape[:2]} matches neither crop {crop.shape} nor frame")
        if image1_full is not None:
            image1_full = as_image(image1_full, "image1_full")
            if image1_full.shape[:2] != crop.full_shape:
                raise RejectedInputError("image1_full does not match the crop's full frame")
        edge1 = as_image(edge_image, "edge_image") if edge_image is not None else img1
        if edge1.shape[:2] != crop.shape:
            raise RejectedInputError(f"edge_image {edge1.shape[:2]} does not match crop {crop.shape}")
        label_flow = None
        if label is not None:
            label_flow = as_flow(getattr(label, "flow", label), "label")
            if label_flow.shape[:2] != crop.shape:
                raise RejectedInputError(f"label {label_flow.shape[:2]} does not match crop {crop.shape}")

        img2_crop = crop.apply(img2)
        if image1_full is None and not crop.is_full:
            # backward direction falls back to crop-only warping
            backward_target, backward_crop = img1, CropWindow.full(*crop.shape)
        else:
            backward_target = image1_full if image1_full is not None else img1
            backward_crop = crop

        estimator_class = self.registry.get(cfg.occlusion.method)
        if estimator_class is None:
            raise RejectedInputError(f"unknown occlusion estimator '{cfg.occlusion.method}'")
        with_backward = estimator_class.get_config().needs_backward

        levels = _level_geometry(crop, cfg)
        backward_levels = _level_geometry(backward_crop, cfg)
        iterates: List[np.ndarray] = []
        history: List[Tuple[float, ...]] = []
        forward_flow = np.zeros(levels[0].shape + (2,))
        backward_flow = np.zeros(levels[0].shape + (2,))
        forward = backward = None
        global_step = 0

        for index, (level, back_level) in enumerate(zip(levels, backward_levels)):
            finest = index == cfg.levels - 1
            if forward is not None:
                forward_flow = resize_flow(forward.flow, level.shape)
                if backward is not None:
                    backward_flow = resize_flow(backward.flow, level.shape)
            forward = _Direction(
                self._objective.bind(
                    LossInputs(
                        _resize_to(img1, level.shape),
                        _resize_to(img2, level.full_shape),
                        edge_image=_resize_to(edge1, level.shape),
                    ),
                    affine=level.affine,
                ),
                forward_flow,
            )
            backward = None
            if with_backward:
                backward = _Direction(
                    self._objective.bind(
                        LossInputs(
                            _resize_to(img2_crop, level.shape),
                            _resize_to(backward_target, back_level.full_shape),
                        ),
                        affine=back_level.affine,
                    ),
                    backward_flow,
                )

            steps = cfg.steps[index]
            tail_start = cfg.tail_start(steps)
            checkpoints = _checkpoint_steps(steps, cfg.checkpoints_per_level)
            level_label = label_flow if finest else None
            level_history: List[float] = []
            level_started = time.perf_counter()

            for step in range(steps):
                if step % cfg.occlusion.recompute_every == 0 and (step < tail_start or step == 0):
                    self._refresh_occlusion(forward, backward, level, back_level)

                weights = cfg.weights
                if level_label is not None:
                    weights = replace(
                        weights, self_weight=cfg.ramp.weight_at(step / steps, cfg.weights.self_weight)
                    )
                lr = cfg.learning_rate_at(step, steps)

                breakdown = forward.objective.evaluate(
                    forward.flow, occlusion=forward.occlusion, weights=weights, label=level_label
                )
                if not np.isfinite(breakdown.total):
                    raise NumericalError("forward loss diverged", step=global_step)
                forward.state, forward.flow = adam_step(
                    forward.state, forward.flow, breakdown.gradient, cfg.hyper, lr
                )
                if backward is not None:
                    back = backward.objective.evaluate(backward.flow, occlusion=backward.occlusion)
                    if not np.isfinite(back.total):
                        raise NumericalError("backward loss diverged", step=global_step)
                    backward.state, backward.flow = adam_step(
                        backward.state, backward.flow, back.gradient, cfg.hyper, lr
                    )

                level_history.append(breakdown.total)
                for _ in range(checkpoints.count(step)):
                    iterates.append(
                        forward.flow.copy() if finest else resize_flow(forward.flow, crop.shape)
                    )
                global_step += 1

            history.append(tuple(level_history))
            latency = (time.perf_counter() - level_started) * 1000.0
            logger.debug("level %d %s: loss %.6g after %d steps", index, level.shape, level_history[-1], steps)
            if self._run_logger is not None:
                self._run_logger.log_event("solver_level", {
                    "level": index,
                    "shape": list(level.shape),
                    "steps": steps,
                    "initial_loss": level_history[0],
                    "final_loss": level_history[-1],
                    "latency_ms": latency,
                })

        occlusion = forward.occlusion
        if occlusion.shape != crop.shape:
            occlusion = np.clip(resize_image(occlusion, crop.shape), 0.0, 1.0)
        result = SolveResult(
            sequence=FlowSequence(tuple(iterates)),
            backward=backward.flow if backward is not None else None,
            occlusion=occlusion,
            history=tuple(history),
            crop=crop,
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )
        if self._run_logger is not None:
            self._run_logger.log("solver_complete", result)
        return result

    def _refresh_occlusion(
        self,
        forward: _Direction,
        backward: Optional[_Direction],
        level: _Level,
        back_level: _Level,
    ) -> None:
        occ = self.config.occlusion
        backward_flow = backward.flow if backward is not None else None
        forward.occlusion = estimate_occlusion(
            forward.flow, backward_flow, occ, crop=level.crop, registry=self.registry
        )
        if backward is not None:
            backward.occlusion = estimate_occlusion(
                backward.flow, forward.flow, occ, crop=back_level.crop, registry=self.registry
            )


def estimate_flow(
    image1: np.ndarray,
    image2_full: np.ndarray,
    crop: Optional[CropWindow] = None,
    config: Optional[SolverConfig] = None,
    label: Optional[np.ndarray] = None,
) -> FlowSequence:
    """Solve one pair and return its recorded iterates."""
    return FlowSolver(config).solve(image1, image2_full, crop=crop, label=label).sequence


def evaluate_sequence(
    sequence: FlowSequence,
    inputs: LossInputs,
    weights: Optional[LossWeights] = None,
    photometric: Optional[PhotometricConfig] = None,
) -> float:
    """Sequence-weighted total loss over every recorded iterate."""
    weights = weights or LossWeights()
    bound = Objective(weights, photometric).bind(inputs)
    losses = [bound.evaluate(flow).total for flow in sequence.iterates]
    return sequence_weighted_loss(losses, weights.sequence_gamma)
