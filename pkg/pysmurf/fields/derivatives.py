"""
Forward finite differences with border shrinkage, and their adjoint.
"""

from typing import Literal

import numpy as np

from pysmurf.errors import RejectedInputError

Axis = Literal["x", "y"]

_AXIS_INDEX = {"y": 0, "x": 1}


def _axis_index(axis: str) -> int:
    try:
        return _AXIS_INDEX[axis]
    except KeyError:
        raise RejectedInputError(f"axis must be 'x' or 'y', got '{axis}'") from None


def spatial_derivative(field: np.ndarray, axis: Axis, order: int = 1) -> np.ndarray:
    """
    Apply the forward difference ``order`` times along ``axis``.

    The output shrinks by ``order`` samples along that axis; no border values
    are invented.

    Args:
        field: H x W or H x W x C array
        axis: "x" (columns) or "y" (rows)
        order: 1 or 2
    """
    if order not in (1, 2):
        raise RejectedInputError(f"derivative order must be 1 or 2, got {order}")
    arr = np.asarray(field, dtype=np.float64)
    index = _axis_index(axis)
    if arr.ndim < 2 or arr.shape[index] < order + 1:
        raise RejectedInputError(
            f"field needs at least {order + 1} samples along {axis}, got shape {arr.shape}"
        )
    return np.diff(arr, n=order, axis=index)


def spatial_derivative_adjoint(grad: np.ndarray, axis: Axis, order: int = 1) -> np.ndarray:
    """
    Transpose of ``spatial_derivative``: maps a gradient on the shrunken grid
    back onto the original grid.
    """
    if order not in (1, 2):
        raise RejectedInputError(f"derivative order must be 1 or 2, got {order}")
    index = _axis_index(axis)
    out = np.asarray(grad, dtype=np.float64)
    pad = [(0, 0)] * out.ndim
    pad[index] = (1, 1)
    for _ in range(order):
        out = -np.diff(np.pad(out, pad), axis=index)
    return out
