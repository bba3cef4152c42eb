"""
Objective - the weighted unsupervised loss evaluated against one frame pair.

Terms run in a fixed order (photometric, smoothness, self-supervision) and
each contributes a TermResult to the LossBreakdown.
"""

import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from pysmurf.fields.types import CropWindow, as_image
from pysmurf.objectives.breakdown import LossBreakdown, TermResult
from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.objectives.photometric import Affine, PhotometricTerm
from pysmurf.objectives.smoothness import SmoothnessTerm
from pysmurf.objectives.supervision import FbMasks, self_supervision_loss


@dataclass
class LossInputs:
    """
    Everything the three loss terms read besides the flow.

    ``image1`` is frame 1 on the flow's grid (the crop). ``edge_image``
    defaults to ``image1``; pass the un-augmented crop when ``image1`` was
    photometrically augmented. ``label`` is the frozen teacher flow.
    """
    image1: np.ndarray
    image2_full: np.ndarray
    crop: Optional[CropWindow] = None
    occlusion: Optional[np.ndarray] = None
    edge_image: Optional[np.ndarray] = None
    label: Optional[np.ndarray] = None
    label_masks: Optional[FbMasks] = None


class Objective:
    """
    Weighted sum of photometric, smoothness and self-supervision losses.

    Usage:
        objective = Objective(weights=LossWeights(smooth=4.0, smoothness_order=2))
        breakdown = objective.evaluate(flow, LossInputs(image1, image2))
        breakdown.total, breakdown.gradient
    """

    def __init__(
        self,
        weights: Optional[LossWeights] = None,
        photometric: Optional[PhotometricConfig] = None,
    ):
        self.weights = weights or LossWeights()
        self.photometric = photometric or PhotometricConfig()

    def bind(self, inputs: LossInputs, affine: Optional[Affine] = None) -> "BoundObjective":
        """Precompute everything that does not depend on the flow."""
        return BoundObjective(self, inputs, affine)

    def evaluate(self, flow: np.ndarray, inputs: LossInputs) -> LossBreakdown:
        return self.bind(inputs).evaluate(flow)


class BoundObjective:
    """An Objective with its image-dependent state prepared for repeated use."""

    def __init__(self, objective: Objective, inputs: LossInputs, affine: Optional[Affine] = None):
        self.weights = objective.weights
        self.config = objective.photometric
        self.inputs = inputs

        image1 = as_image(inputs.image1, "image1")
        image2 = as_image(inputs.image2_full, "image2_full")
        crop = inputs.crop or CropWindow.full(*image1.shape[:2])
        if affine is None and not self.config.full_image_warping and not crop.is_full:
            # crop-only warping: frame 2 is cut to the crop before sampling
            image2 = crop.apply(image2)
            crop = CropWindow.full(*crop.shape)
        self._photometric = PhotometricTerm(image1, image2, self.config, crop=crop, affine=affine)

        edge_image = inputs.edge_image if inputs.edge_image is not None else image1
        self._smoothness = SmoothnessTerm(
            edge_image, self.weights.smoothness_order, self.weights.edge_lambda
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self._photometric.shape

    def evaluate(
        self,
        flow: np.ndarray,
        occlusion: Optional[np.ndarray] = None,
        weights: Optional[LossWeights] = None,
        label: Optional[np.ndarray] = None,
    ) -> LossBreakdown:
        """
        Args:
            flow: flow on the crop grid
            occlusion: overrides ``inputs.occlusion`` for this call
            weights: overrides the objective's weights (self-supervision ramp)
            label: overrides ``inputs.label`` for this call

        Returns:
            LossBreakdown
        """
        weights = weights or self.weights
        occlusion = occlusion if occlusion is not None else self.inputs.occlusion
        label = label if label is not None else self.inputs.label
        terms: Dict[str, TermResult] = {}

        # ========================================
        # TERM 1: PHOTOMETRIC
        # ========================================
        start = time.perf_counter()
        value, grad = self._photometric.evaluate(flow, occlusion)
        terms["photometric"] = TermResult("photometric", value, grad, _elapsed_ms(start))

        # ========================================
        # TERM 2: SMOOTHNESS
        # ========================================
        start = time.perf_counter()
        value, grad = self._smoothness.evaluate(flow)
        terms["smoothness"] = TermResult("smoothness", value, grad, _elapsed_ms(start))

        # ========================================
        # TERM 3: SELF-SUPERVISION (label optional)
        # ========================================
        start = time.perf_counter()
        if label is None:
            value, grad = 0.0, np.zeros(np.shape(flow))
        else:
            value, grad = self_supervision_loss(
                label,
                flow,
                masking=self.inputs.label_masks,
                eps=weights.charbonnier_eps,
                alpha=weights.charbonnier_alpha,
                normalization=self.config.normalization,
            )
        terms["self_supervision"] = TermResult("self_supervision", value, grad, _elapsed_ms(start))

        return LossBreakdown.combine(terms, weights)


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def total_loss(
    flow: np.ndarray,
    inputs: LossInputs,
    weights: Optional[LossWeights] = None,
    photometric: Optional[PhotometricConfig] = None,
) -> LossBreakdown:
    """Evaluate the weighted objective once; see ``Objective`` for repeated use."""
    return Objective(weights, photometric).evaluate(flow, inputs)
