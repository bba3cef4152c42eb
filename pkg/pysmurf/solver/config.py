"""
Solver configuration.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from pysmurf.errors import RejectedInputError
from pysmurf.objectives.config import LossWeights, PhotometricConfig
from pysmurf.occlusion.config import OcclusionConfig
from pysmurf.solver.adam import AdamHyper, tail_decayed_rate, tail_start_step


@dataclass(frozen=True)
class SelfSupRamp:
    """
    Self-supervision weight schedule over the finest-level steps.

    0 before ``start``, linear up to ``final_weight`` at ``end``, constant
    after. ``final_weight`` None means the loss weights' ``self_weight``.
    """
    start: float = 0.4
    end: float = 0.5
    final_weight: Optional[float] = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.start <= self.end <= 1.0):
            raise RejectedInputError(f"ramp fractions must satisfy 0 <= start <= end <= 1: {self}")
        if self.final_weight is not None and self.final_weight < 0:
            raise RejectedInputError(f"final_weight must be non-negative, got {self.final_weight}")

    def weight_at(self, fraction: float, default_weight: float) -> float:
        """Self-supervision weight at ``fraction`` of the finest level."""
        final = default_weight if self.final_weight is None else self.final_weight
        if fraction < self.start:
            return 0.0
        if fraction >= self.end:
            return final
        return final * (fraction - self.start) / (self.end - self.start)


@dataclass(frozen=True)
class SolverConfig:
    """
    Coarse-to-fine solver settings.

    ``steps`` lists steps per level, coarsest first. The flow variable is in
    pixels, so the learning rate is far larger than a network's.
    """
    levels: int = 3
    steps: Tuple[int, ...] = (300, 300, 400)
    downscale: float = 2.0
    hyper: AdamHyper = field(default_factory=lambda: AdamHyper(learning_rate=0.05))
    tail_fraction: float = 0.2
    tail_decay: float = 1e-3
    weights: LossWeights = field(default_factory=LossWeights)
    photometric: PhotometricConfig = field(default_factory=PhotometricConfig)
    occlusion: OcclusionConfig = field(default_factory=OcclusionConfig)
    ramp: SelfSupRamp = field(default_factory=SelfSupRamp)
    checkpoints_per_level: int = 4
    min_level_size: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.levels < 1:
            raise RejectedInputError(f"levels must be >= 1, got {self.levels}")
        if len(self.steps) != self.levels:
            raise RejectedInputError(f"steps {self.steps} must list one count per level ({self.levels})")
        if min(self.steps) < 1:
            raise RejectedInputError(f"steps must be positive, got {self.steps}")
        if self.downscale <= 1.0:
            raise RejectedInputError(f"downscale must exceed 1, got {self.downscale}")
        if not 0.0 <= self.tail_fraction < 1.0:
            raise RejectedInputError(f"tail_fraction must lie in [0, 1), got {self.tail_fraction}")
        if not 0.0 < self.tail_decay <= 1.0:
            raise RejectedInputError(f"tail_decay must lie in (0, 1], got {self.tail_decay}")
        if self.checkpoints_per_level < 1:
            raise RejectedInputError("checkpoints_per_level must be >= 1")
        if self.min_level_size < 3:
            raise RejectedInputError("min_level_size must be >= 3")

    @property
    def total_steps(self) -> int:
        return sum(self.steps)

    def learning_rate_at(self, step: int, level_steps: int) -> float:
        """Constant, then exponential decay to ``tail_decay`` x over the tail."""
        return tail_decayed_rate(
            self.hyper.learning_rate, step, level_steps, self.tail_fraction, self.tail_decay
        )

    def tail_start(self, level_steps: int) -> int:
        return tail_start_step(level_steps, self.tail_fraction)

    def with_steps(self, steps: Tuple[int, ...]) -> "SolverConfig":
        return replace(self, levels=len(steps), steps=tuple(steps))

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "steps": list(self.steps),
            "downscale": self.downscale,
            "hyper": self.hyper.to_dict(),
            "tail_fraction": self.tail_fraction,
            "tail_decay": self.tail_decay,
            "weights": self.weights.to_dict(),
            "photometric": self.photometric.to_dict(),
            "occlusion": self.occlusion.to_dict(),
            "ramp": {"start": self.ramp.start, "end": self.ramp.end, "final_weight": self.ramp.final_weight},
            "checkpoints_per_level": self.checkpoints_per_level,
            "min_level_size": self.min_level_size,
            "seed": self.seed,
        }


def selfsup_finetune_config(config: SolverConfig) -> SolverConfig:
    """
    Pure self-supervision phase: photometric and smoothness off, the label
    weighted 1 from the first step, single level at full resolution.
    """
    return replace(
        config,
        levels=1,
        steps=(config.steps[-1],),
        weights=replace(config.weights, photo=0.0, smooth=0.0, self_weight=1.0),
        ramp=SelfSupRamp(start=0.0, end=0.0, final_weight=1.0),
        occlusion=replace(config.occlusion, method="none"),
    )
