"""
Sequence weighting: gamma^(n-i) over n iterates, the latest weighted 1.
"""

from typing import Sequence

import numpy as np

from pysmurf.errors import RejectedInputError


def sequence_weights(n: int, gamma: float = 0.8) -> np.ndarray:
    """Weights gamma^(n-1), ..., gamma, 1 for iterates 1..n."""
    if n < 1:
        raise RejectedInputError("sequence must contain at least one iterate")
    if not 0.0 < gamma <= 1.0:
        raise RejectedInputError(f"gamma must lie in (0, 1], got {gamma}")
    return gamma ** np.arange(n - 1, -1, -1, dtype=np.float64)


def sequence_weighted_loss(losses: Sequence[float], gamma: float = 0.8) -> float:
    """sum_i gamma^(n-i) * L_i."""
    values = np.asarray(list(losses), dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise RejectedInputError("sequence must contain at least one iterate")
    return float(np.dot(sequence_weights(values.size, gamma), values))
