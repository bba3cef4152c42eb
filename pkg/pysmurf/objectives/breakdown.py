"""
LossBreakdown - the result of one objective evaluation.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from pysmurf.objectives.config import LossWeights


@dataclass(frozen=True)
class TermResult:
    """Result from a single loss term."""
    name: str
    value: float
    gradient: np.ndarray = field(compare=False, repr=False)
    latency_ms: float = 0.0


@dataclass(frozen=True)
class LossBreakdown:
    """
    Per-term values, their weighted total and the gradient wrt the flow.

    ``total`` is always photo * w_photo + smooth * w_smooth + self * w_self,
    evaluated in that order.
    """
    photometric: float
    smoothness: float
    self_supervision: float
    total: float
    gradient: np.ndarray = field(compare=False, repr=False)
    weights: LossWeights = field(default_factory=LossWeights)
    terms: Dict[str, TermResult] = field(default_factory=dict, compare=False, repr=False)

    @staticmethod
    def weighted_total(photometric: float, smoothness: float, self_supervision: float,
                       weights: LossWeights) -> float:
        return (
            weights.photo * photometric
            + weights.smooth * smoothness
            + weights.self_weight * self_supervision
        )

    @classmethod
    def combine(cls, terms: Dict[str, TermResult], weights: LossWeights) -> "LossBreakdown":
        """Factory: weight the three terms and their gradients."""
        photo = terms["photometric"]
        smooth = terms["smoothness"]
        selfsup = terms["self_supervision"]
        gradient = (
            weights.photo * photo.gradient
            + weights.smooth * smooth.gradient
            + weights.self_weight * selfsup.gradient
        )
        return cls(
            photometric=photo.value,
            smoothness=smooth.value,
            self_supervision=selfsup.value,
            total=cls.weighted_total(photo.value, smooth.value, selfsup.value, weights),
            gradient=gradient,
            weights=weights,
            terms=dict(terms),
        )

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.total) and np.all(np.isfinite(self.gradient)))

    def to_dict(self) -> dict:
        """Serialize for JSON audit logging."""
        return {
            "photometric": self.photometric,
            "smoothness": self.smoothness,
            "self_supervision": self.self_supervision,
            "total": self.total,
            "weights": self.weights.to_dict(),
            "latency_ms": {name: t.latency_ms for name, t in self.terms.items()},
        }

    def to_lines(self) -> str:
        """Line-oriented ``key value`` text, as printed by ``pysmurf loss``."""
        return "\n".join(
            f"{key} {value:.10g}"
            for key, value in (
                ("photometric", self.photometric),
                ("smoothness", self.smoothness),
                ("self_supervision", self.self_supervision),
                ("total", self.total),
            )
        )
