"""
Loss configuration: term weights and photometric (census) constants.
"""

from dataclasses import asdict, dataclass
from typing import Literal, Optional

from pysmurf.errors import RejectedInputError


@dataclass(frozen=True)
class LossWeights:
    """
    Weights and constants of the unsupervised objective.

    The defaults are the Sintel configuration; see pysmurf.config for the
    KITTI and Chairs presets.
    """
    photo: float = 1.0
    smooth: float = 2.5
    self_weight: float = 0.3
    edge_lambda: float = 150.0
    smoothness_order: int = 1
    charbonnier_eps: float = 0.001
    charbonnier_alpha: float = 0.5
    sequence_gamma: float = 0.8
    sequence_length: int = 12

    def __post_init__(self) -> None:
        for name in ("photo", "smooth", "self_weight", "edge_lambda", "charbonnier_alpha"):
            if getattr(self, name) < 0:
                raise RejectedInputError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.smoothness_order not in (1, 2):
            raise RejectedInputError(f"smoothness_order must be 1 or 2, got {self.smoothness_order}")
        if self.charbonnier_eps <= 0:
            raise RejectedInputError(f"charbonnier_eps must be positive, got {self.charbonnier_eps}")
        if not 0.0 < self.sequence_gamma <= 1.0:
            raise RejectedInputError(f"sequence_gamma must lie in (0, 1], got {self.sequence_gamma}")
        if self.sequence_length < 1:
            raise RejectedInputError(f"sequence_length must be >= 1, got {self.sequence_length}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PhotometricConfig:
    """
    Census photometric constants (UnFlow lineage).

    ``soft_sign`` is the c in t / sqrt(c + t^2) applied to census differences;
    None keeps raw intensity differences.
    """
    census_window: int = 7
    saturation: float = 0.1
    intensity_scale: float = 255.0
    soft_sign: Optional[float] = 0.81
    distance_eps: float = 0.001
    distance_alpha: float = 0.25
    normalization: Literal["mean", "mask"] = "mean"
    full_image_warping: bool = True

    def __post_init__(self) -> None:
        if self.census_window < 3 or self.census_window % 2 == 0:
            raise RejectedInputError(f"census_window must be odd and >= 3, got {self.census_window}")
        if self.saturation <= 0:
            raise RejectedInputError(f"saturation must be positive, got {self.saturation}")
        if self.intensity_scale <= 0:
            raise RejectedInputError(f"intensity_scale must be positive, got {self.intensity_scale}")
        if self.soft_sign is not None and self.soft_sign <= 0:
            raise RejectedInputError(f"soft_sign must be positive or None, got {self.soft_sign}")
        if self.distance_eps <= 0:
            raise RejectedInputError(f"distance_eps must be positive, got {self.distance_eps}")
        if self.normalization not in ("mean", "mask"):
            raise RejectedInputError(f"normalization must be 'mean' or 'mask', got {self.normalization}")

    def to_dict(self) -> dict:
        return asdict(self)
