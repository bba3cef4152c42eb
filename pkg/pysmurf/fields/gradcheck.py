"""
Finite-difference gradient checking.

Every differentiable operation in pysmurf exposes a ``(loss, gradient)``
callable; this module compares its analytic gradient with central differences.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from pysmurf.errors import GradCheckError, RejectedInputError

logger = logging.getLogger("pysmurf.gradcheck")

LossAndGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]

_DENOMINATOR_FLOOR = 1e-8


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of a finite-difference comparison."""
    max_relative_error: float
    worst_index: Tuple[int, ...]
    analytic: float          # analytic derivative at the worst index
    numeric: float           # central difference at the worst index
    probes: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "max_relative_error": self.max_relative_error,
            "worst_index": list(self.worst_index),
            "analytic": self.analytic,
            "numeric": self.numeric,
            "probes": self.probes,
            "passed": self.passed,
        }


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / (|a| + |n| + 1e-8)."""
    return abs(analytic - numeric) / (abs(analytic) + abs(numeric) + _DENOMINATOR_FLOOR)


def finite_difference_check(
    loss_and_grad: LossAndGrad,
    point: np.ndarray,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    probes: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare an analytic gradient against (L(x+h) - L(x-h)) / 2h.

    Args:
        loss_and_grad: callable returning (scalar loss, gradient shaped like x)
        point: where to evaluate
        step: finite-difference step h > 0
        tolerance: pass threshold on the max relative error
        probes: number of randomly chosen elements to probe (all when None)
        seed: RNG seed for probe selection

    Returns:
        GradCheckReport

    Raises:
        GradCheckError: if the loss is non-finite at any probe
    """
    if step <= 0:
        raise RejectedInputError(f"step must be positive, got {step}")
    x = np.array(point, dtype=np.float64)
    loss, analytic = loss_and_grad(x.copy())
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise RejectedInputError(f"gradient shape {analytic.shape} != point shape {x.shape}")
    if not np.isfinite(loss):
        raise GradCheckError("loss is non-finite at the base point", [()])

    if probes is None or probes >= x.size:
        flat_indices = np.arange(x.size)
    else:
        flat_indices = np.sort(np.random.default_rng(seed).choice(x.size, probes, replace=False))

    worst = (-1.0, (), 0.0, 0.0)
    bad_coordinates = []
    for flat in flat_indices:
        index = np.unravel_index(flat, x.shape)
        original = x[index]
        x[index] = original + step
        plus = loss_and_grad(x.copy())[0]
        x[index] = original - step
        minus = loss_and_grad(x.copy())[0]
        x[index] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            bad_coordinates.append(tuple(int(i) for i in index))
            continue
        numeric = (plus - minus) / (2.0 * step)
        err = relative_error(float(analytic[index]), float(numeric))
        if err > worst[0]:
            worst = (err, tuple(int(i) for i in index), float(analytic[index]), float(numeric))

    if bad_coordinates:
        raise GradCheckError(
            f"non-finite loss at {len(bad_coordinates)} probe(s)", bad_coordinates
        )

    max_err, worst_index, a_val, n_val = worst
    max_err = max(max_err, 0.0)
    report = GradCheckReport(
        max_relative_error=max_err,
        worst_index=worst_index,
        analytic=a_val,
        numeric=n_val,
        probes=len(flat_indices),
        passed=max_err < tolerance,
    )
    logger.debug("gradcheck max relative error %.3e over %d probes", max_err, len(flat_indices))
    return report
