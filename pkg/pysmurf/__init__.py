"""
pysmurf - Unsupervised optical flow objectives and a direct flow solver.

Occlusion-aware census photometric loss with full-image warping,
edge-aware smoothness, sequence-weighted self-supervision, augmentation
with replayable records and multi-frame inpainted labels, all with
analytic gradients checked against finite differences.
"""

__version__ = "0.1.0"
__author__ = "pysmurf Contributors"

# Core exports
from pysmurf.errors import (
    DatasetError,
    FlowFormatError,
    GradCheckError,
    NumericalError,
    PySmurfError,
    RejectedInputError,
)
from pysmurf.fields.types import CropWindow
from pysmurf.objectives import LossBreakdown, LossInputs, LossWeights, Objective, PhotometricConfig, total_loss
from pysmurf.occlusion import OcclusionConfig, estimate_occlusion
from pysmurf.solver import FlowSequence, FlowSolver, SolveResult, SolverConfig, estimate_flow
from pysmurf.selfsup import AugmentConfig, AugmentRecord, SelfSupLabel
from pysmurf.config import RunConfig, load_config, preset_config

# Plugins
from pysmurf.plugins import BaseOcclusionEstimator, EstimatorRegistry, occlusion_plugin

__all__ = [
    # Errors
    "PySmurfError",
    "RejectedInputError",
    "FlowFormatError",
    "DatasetError",
    "NumericalError",
    "GradCheckError",
    # Core
    "CropWindow",
    "LossBreakdown",
    "LossInputs",
    "LossWeights",
    "Objective",
    "PhotometricConfig",
    "total_loss",
    "OcclusionConfig",
    "estimate_occlusion",
    "FlowSequence",
    "FlowSolver",
    "SolveResult",
    "SolverConfig",
    "estimate_flow",
    "AugmentConfig",
    "AugmentRecord",
    "SelfSupLabel",
    "RunConfig",
    "load_config",
    "preset_config",
    # Plugins
    "BaseOcclusionEstimator",
    "EstimatorRegistry",
    "occlusion_plugin",
]
