"""
SelfSupLabel - a frozen flow label for self-supervision.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Tuple

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.types import as_flow, as_mask

Provenance = Literal["two_frame", "multi_frame"]


@dataclass(frozen=True)
class SelfSupLabel:
    """
    Flow label plus validity, on the student's grid.

    The arrays are copied read-only on construction; nothing downstream can
    push a gradient or an edit back into them.
    """
    flow: np.ndarray = field(compare=False)
    valid: np.ndarray = field(compare=False)
    provenance: Provenance = "two_frame"
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        flow = as_flow(self.flow, "label flow").copy()
        valid = as_mask(self.valid, flow.shape[:2], "label validity").copy()
        if self.provenance not in ("two_frame", "multi_frame"):
            raise RejectedInputError(f"unknown label provenance '{self.provenance}'")
        flow.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "flow", flow)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def create(cls, flow: np.ndarray, provenance: Provenance = "two_frame", **metadata: Any) -> "SelfSupLabel":
        """Factory for a fully valid label."""
        return cls(flow, np.ones(np.shape(flow)[:2]), provenance, dict(metadata))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.flow.shape[:2]

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "shape": list(self.shape),
            "valid_fraction": float(self.valid.mean()),
            **self.metadata,
        }
