"""
The unsupervised objective: census photometric, edge-aware smoothness,
self-supervision, sequence weighting and their weighted total.
"""

from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.objectives.census import (
    CensusFeatures,
    census_of_intensity,
    census_offsets,
    census_transform,
    charbonnier,
    charbonnier_grad,
    soft_hamming,
)
from pysmurf.objectives.photometric import PhotometricTerm, photometric_loss
from pysmurf.objectives.smoothness import SmoothnessTerm, edge_weights, smoothness_loss
from pysmurf.objectives.supervision import self_supervision_loss
from pysmurf.objectives.sequence import sequence_weighted_loss, sequence_weights
from pysmurf.objectives.breakdown import LossBreakdown, TermResult
from pysmurf.objectives.objective import BoundObjective, LossInputs, Objective, total_loss

__all__ = [
    "LossWeights",
    "PhotometricConfig",
    "CensusFeatures",
    "census_of_intensity",
    "census_offsets",
    "census_transform",
    "charbonnier",
    "charbonnier_grad",
    "soft_hamming",
    "PhotometricTerm",
    "photometric_loss",
    "SmoothnessTerm",
    "edge_weights",
    "smoothness_loss",
    "self_supervision_loss",
    "sequence_weighted_loss",
    "sequence_weights",
    "LossBreakdown",
    "TermResult",
    "BoundObjective",
    "LossInputs",
    "Objective",
    "total_loss",
]
