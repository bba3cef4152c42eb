"""
Direct per-pair flow solver.
"""

from pysmurf.solver.adam import AdamHyper, AdamState, adam_step, tail_decayed_rate
from pysmurf.solver.config import SelfSupRamp, SolverConfig, selfsup_finetune_config
from pysmurf.solver.solver import (
    FlowSequence,
    FlowSolver,
    SolveResult,
    estimate_flow,
    evaluate_sequence,
)

__all__ = [
    "AdamHyper",
    "AdamState",
    "adam_step",
    "tail_decayed_rate",
    "SelfSupRamp",
    "SolverConfig",
    "selfsup_finetune_config",
    "FlowSequence",
    "FlowSolver",
    "SolveResult",
    "estimate_flow",
    "evaluate_sequence",
]
