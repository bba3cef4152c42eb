"""
Edge-aware k-th order smoothness.
"""

from typing import Optional, Tuple

import numpy as np

from pysmurf.errors import RejectedInputError
from pysmurf.fields.derivatives import spatial_derivative, spatial_derivative_adjoint
from pysmurf.fields.types import as_flow, as_image


def edge_weights(image: np.ndarray, order: int, edge_lambda: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    exp(-lambda * mean_c |I_c(p + k) - I_c(p)|) along x and along y.

    The image difference spans ``order`` pixels so the weights line up with
    the k-th flow derivative. Weights are constants for the flow gradient.

    Returns:
        (weights_x of shape H x (W-k), weights_y of shape (H-k) x W)
    """
    img = as_image(image)
    k = order
    if img.shape[0] < k + 1 or img.shape[1] < k + 1:
        raise RejectedInputError(f"image {img.shape[:2]} too small for order {k}")
    grad_x = np.abs(img[:, k:] - img[:, :-k]).mean(axis=2)
    grad_y = np.abs(img[k:, :] - img[:-k, :]).mean(axis=2)
    return np.exp(-edge_lambda * grad_x), np.exp(-edge_lambda * grad_y)


class SmoothnessTerm:
    """Smoothness loss with edge weights precomputed from one image."""

    def __init__(self, image: np.ndarray, order: int = 1, edge_lambda: float = 150.0):
        if order not in (1, 2):
            raise RejectedInputError(f"smoothness order must be 1 or 2, got {order}")
        if edge_lambda < 0:
            raise RejectedInputError(f"edge_lambda must be non-negative, got {edge_lambda}")
        self.order = order
        self.shape = as_image(image).shape[:2]
        self.weights_x, self.weights_y = edge_weights(image, order, edge_lambda)

    def evaluate(self, flow: np.ndarray, with_grad: bool = True) -> Tuple[float, Optional[np.ndarray]]:
        flow = as_flow(flow)
        if flow.shape[:2] != self.shape:
            raise RejectedInputError(f"flow {flow.shape[:2]} does not match image {self.shape}")
        k = self.order
        if min(self.shape) < k + 1:
            raise RejectedInputError(f"flow {self.shape} too small for order {k}")

        loss = 0.0
        grad = np.zeros_like(flow) if with_grad else None
        for axis, weights in (("x", self.weights_x), ("y", self.weights_y)):
            d = spatial_derivative(flow, axis, k)
            weighted = weights[..., None] * np.abs(d)
            loss += float(weighted.mean())
            if with_grad:
                g = weights[..., None] * np.sign(d) / d.size
                grad += spatial_derivative_adjoint(g, axis, k)
        return loss, grad


def smoothness_loss(
    image: np.ndarray,
    flow: np.ndarray,
    order: int = 1,
    edge_lambda: float = 150.0,
) -> Tuple[float, np.ndarray]:
    """
    Edge-aware smoothness of a flow field.

    mean(w_x * |d^k V / dx^k|) + mean(w_y * |d^k V / dy^k|), each mean taken
    over the shrunken grid and both flow channels.

    Args:
        image: un-augmented frame 1 on the flow's grid (edge weights)
        flow: H x W x 2 flow
        order: derivative order k, 1 or 2
        edge_lambda: edge sensitivity

    Returns:
        (scalar loss, gradient wrt flow)
    """
    term = SmoothnessTerm(image, order, edge_lambda)
    loss, grad = term.evaluate(flow)
    return loss, grad
