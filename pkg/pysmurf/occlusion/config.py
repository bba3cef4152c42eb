"""
Occlusion estimation settings.
"""

from dataclasses import asdict, dataclass, field

from pysmurf.errors import RejectedInputError


@dataclass(frozen=True)
class FbParams:
    """
    Forward-backward consistency thresholds.

    A pixel is visible while |f + b|^2 < alpha1 * (|f|^2 + |b|^2) + alpha2.
    """
    alpha1: float = 0.01
    alpha2: float = 0.5

    def __post_init__(self) -> None:
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise RejectedInputError(f"fb thresholds must be non-negative: {self}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OcclusionConfig:
    """
    Which estimator runs, its parameters, and how often the solver refreshes it.
    """
    method: str = "range_map"
    range_threshold: float = 0.75
    fb: FbParams = field(default_factory=FbParams)
    recompute_every: int = 50
    full_image_override: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.range_threshold <= 1.0:
            raise RejectedInputError(f"range_threshold must lie in (0, 1], got {self.range_threshold}")
        if self.recompute_every < 1:
            raise RejectedInputError(f"recompute_every must be >= 1, got {self.recompute_every}")

    def estimator_kwargs(self) -> dict:
        """Constructor arguments for the selected built-in estimator."""
        if self.method == "range_map":
            return {"threshold": self.range_threshold}
        if self.method == "fb_consistency":
            return {"params": self.fb}
        return {}

    def to_dict(self) -> dict:
        return asdict(self)
