"""
Adam on a dense array variable.
"""

from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from pysmurf.errors import NumericalError, RejectedInputError


@dataclass(frozen=True)
class AdamHyper:
    """Adam constants; the defaults are the network-training values."""
    learning_rate: float = 0.0002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise RejectedInputError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise RejectedInputError(f"betas must lie in [0, 1): {self}")
        if self.eps <= 0:
            raise RejectedInputError(f"eps must be positive, got {self.eps}")

    def to_dict(self) -> dict:
        return asdict(self)


class AdamState(NamedTuple):
    """First and second moments plus the number of steps taken."""
    m: np.ndarray
    v: np.ndarray
    step: int

    @classmethod
    def zeros_like(cls, variable: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(variable, dtype=np.float64), np.zeros_like(variable, dtype=np.float64), 0)


def adam_step(
    state: AdamState,
    variable: np.ndarray,
    gradient: np.ndarray,
    hyper: AdamHyper,
    learning_rate: Optional[float] = None,
) -> Tuple[AdamState, np.ndarray]:
    """
    One bias-corrected Adam update.

    Args:
        state: moments from the previous step
        variable: current value
        gradient: dL/dvariable
        hyper: Adam constants
        learning_rate: overrides ``hyper.learning_rate`` (schedules)

    Returns:
        (new state, updated variable); inputs are not modified

    Raises:
        NumericalError: if the gradient has a non-finite entry
    """
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != state.m.shape or np.shape(variable) != state.m.shape:
        raise RejectedInputError(
            f"shape mismatch: state {state.m.shape}, variable {np.shape(variable)}, gradient {gradient.shape}"
        )
    finite = np.isfinite(gradient)
    if not np.all(finite):
        bad = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise NumericalError("non-finite gradient", step=state.step + 1, location=bad)

    lr = hyper.learning_rate if learning_rate is None else learning_rate
    step = state.step + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * gradient
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * gradient * gradient
    m_hat = m / (1.0 - hyper.beta1 ** step)
    v_hat = v / (1.0 - hyper.beta2 ** step)
    updated = np.asarray(variable, dtype=np.float64) - lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return AdamState(m, v, step), updated


def tail_decayed_rate(
    learning_rate: float,
    step: int,
    total_steps: int,
    tail_fraction: float = 0.2,
    tail_decay: float = 1e-3,
) -> float:
    """
    Constant rate, then exponential decay to ``tail_decay`` times the rate
    over the last ``tail_fraction`` of ``total_steps``.
    """
    tail_start = tail_start_step(total_steps, tail_fraction)
    if step < tail_start:
        return learning_rate
    return learning_rate * tail_decay ** ((step - tail_start + 1) / (total_steps - tail_start))


def tail_start_step(total_steps: int, tail_fraction: float) -> int:
    return total_steps - int(round(tail_fraction * total_steps))
