"""
Multi-frame label generation: a tiny per-frame CNN that maps the backward
flow (t -> t-1) to the forward flow (t -> t+1), trained on non-occluded
pixels and used to inpaint the occluded ones.
"""

import logging
from dataclasses import asdict, dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from pysmurf.errors import NumericalError, RejectedInputError
from pysmurf.fields.conv import conv2d, conv2d_backward
from pysmurf.fields.types import as_flow, as_mask
from pysmurf.objectives.census import charbonnier, charbonnier_grad
from pysmurf.selfsup.types import SelfSupLabel
from pysmurf.solver.adam import AdamHyper, AdamState, adam_step, tail_decayed_rate

logger = logging.getLogger("pysmurf.selfsup")

INPUT_CHANNELS = 4
CHANNELS = (16, 16, 2)
KERNEL_SIZE = 3


@dataclass(frozen=True)
class InversionTrainingConfig:
    """Per-frame training of the inversion model."""
    steps: int = 300
    learning_rate: float = 0.01
    eps: float = 0.001
    alpha: float = 0.5
    tail_fraction: float = 0.2
    tail_decay: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise RejectedInputError(f"steps must be >= 1, got {self.steps}")
        if self.learning_rate <= 0:
            raise RejectedInputError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        return asdict(self)


def coordinate_channels(height: int, width: int) -> np.ndarray:
    """x and y pixel coordinates normalised to [-1, 1], H x W x 2."""
    xs = np.linspace(-1.0, 1.0, width) if width > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, height) if height > 1 else np.zeros(1)
    grid_x, grid_y = np.meshgrid(xs, ys)
    return np.stack([grid_x, grid_y], axis=-1)


class _Activations(NamedTuple):
    x0: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    out: np.ndarray


@dataclass(frozen=True)
class TinyInversionModel:
    """
    Three 3x3 conv layers with [16, 16, 2] channels and ReLU between them.

    Input: backward flow (u, v) plus normalised (x, y) coordinates.
    """
    kernels: Tuple[np.ndarray, np.ndarray, np.ndarray]
    biases: Tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self) -> None:
        expected_in = (INPUT_CHANNELS,) + CHANNELS[:-1]
        for layer, (kernel, bias) in enumerate(zip(self.kernels, self.biases)):
            shape = (KERNEL_SIZE, KERNEL_SIZE, expected_in[layer], CHANNELS[layer])
            if kernel.shape != shape or bias.shape != (CHANNELS[layer],):
                raise RejectedInputError(f"layer {layer} has shape {kernel.shape}/{bias.shape}, expected {shape}")
            if not (np.all(np.isfinite(kernel)) and np.all(np.isfinite(bias))):
                raise NumericalError(f"layer {layer} has non-finite weights")

    @classmethod
    def zeros(cls) -> "TinyInversionModel":
        inputs = (INPUT_CHANNELS,) + CHANNELS[:-1]
        return cls(
            tuple(np.zeros((KERNEL_SIZE, KERNEL_SIZE, c_in, c_out)) for c_in, c_out in zip(inputs, CHANNELS)),
            tuple(np.zeros(c) for c in CHANNELS),
        )

    @classmethod
    def initialize(cls, seed: int = 0) -> "TinyInversionModel":
        """
        He-normal hidden layers drawn from ``seed``; zero output layer and
        zero biases, so a fresh model predicts zero flow everywhere.
        """
        rng = np.random.default_rng(seed)
        inputs = (INPUT_CHANNELS,) + CHANNELS[:-1]
        kernels = []
        for layer, (c_in, c_out) in enumerate(zip(inputs, CHANNELS)):
            if layer == len(CHANNELS) - 1:
                kernels.append(np.zeros((KERNEL_SIZE, KERNEL_SIZE, c_in, c_out)))
            else:
                std = np.sqrt(2.0 / (KERNEL_SIZE * KERNEL_SIZE * c_in))
                kernels.append(rng.normal(0.0, std, (KERNEL_SIZE, KERNEL_SIZE, c_in, c_out)))
        return cls(tuple(kernels), tuple(np.zeros(c) for c in CHANNELS))

    @property
    def parameters(self) -> List[np.ndarray]:
        return [*self.kernels, *self.biases]

    @classmethod
    def from_parameters(cls, params: List[np.ndarray]) -> "TinyInversionModel":
        return cls(tuple(params[:3]), tuple(params[3:]))

    def _forward(self, backward_flow: np.ndarray) -> _Activations:
        flow = as_flow(backward_flow, "backward_flow")
        x0 = np.concatenate([flow, coordinate_channels(*flow.shape[:2])], axis=2)
        z1 = conv2d(x0, self.kernels[0], self.biases[0])
        a1 = np.maximum(z1, 0.0)
        z2 = conv2d(a1, self.kernels[1], self.biases[1])
        a2 = np.maximum(z2, 0.0)
        out = conv2d(a2, self.kernels[2], self.biases[2])
        return _Activations(x0, z1, a1, z2, a2, out)

    def predict(self, backward_flow: np.ndarray) -> np.ndarray:
        """Forward-flow prediction, H x W x 2."""
        return self._forward(backward_flow).out

    def backward(self, acts: _Activations, d_out: np.ndarray) -> List[np.ndarray]:
        """Parameter gradients in ``parameters`` order."""
        g3 = conv2d_backward(acts.a2, self.kernels[2], d_out)
        d_z2 = g3.d_input * (acts.z2 > 0.0)
        g2 = conv2d_backward(acts.a1, self.kernels[1], d_z2)
        d_z1 = g2.d_input * (acts.z1 > 0.0)
        g1 = conv2d_backward(acts.x0, self.kernels[0], d_z1)
        return [g1.d_kernel, g2.d_kernel, g3.d_kernel, g1.d_bias, g2.d_bias, g3.d_bias]

    def to_dict(self) -> dict:
        return {
            "channels": list(CHANNELS),
            "parameters": int(sum(p.size for p in self.parameters)),
        }


def inversion_loss(
    model: TinyInversionModel,
    backward_flow: np.ndarray,
    forward_flow: np.ndarray,
    weight: np.ndarray,
    eps: float = 0.001,
    alpha: float = 0.5,
) -> Tuple[float, List[np.ndarray]]:
    """Weighted mean Charbonnier of prediction vs forward flow, with gradients."""
    acts = model._forward(backward_flow)
    denom = 2.0 * float(weight.sum())
    w = weight[..., None]
    loss = float((w * charbonnier(acts.out, forward_flow, eps, alpha)).sum() / denom)
    d_out = w * charbonnier_grad(acts.out, forward_flow, eps, alpha) / denom
    return loss, model.backward(acts, d_out)


def fit_inversion_model(
    backward_flow: np.ndarray,
    forward_flow: np.ndarray,
    forward_occlusion: np.ndarray,
    config: Optional[InversionTrainingConfig] = None,
) -> Tuple[TinyInversionModel, List[float]]:
    """``train_inversion_model`` that also returns the loss per step."""
    config = config or InversionTrainingConfig()
    backward = as_flow(backward_flow, "backward_flow")
    forward = as_flow(forward_flow, "forward_flow")
    if backward.shape != forward.shape:
        raise RejectedInputError(f"backward {backward.shape[:2]} and forward {forward.shape[:2]} differ")
    weight = as_mask(forward_occlusion, forward.shape[:2], "forward_occlusion")
    if weight.sum() <= 0.0:
        raise RejectedInputError("no non-occluded pixels to supervise the inversion model")

    model = TinyInversionModel.initialize(config.seed)
    params = model.parameters
    states = [AdamState.zeros_like(p) for p in params]
    hyper = AdamHyper(learning_rate=config.learning_rate)
    losses = []
    for step in range(config.steps):
        loss, grads = inversion_loss(model, backward, forward, weight, config.eps, config.alpha)
        if not np.isfinite(loss):
            raise NumericalError("inversion training diverged", step=step)
        losses.append(loss)
        lr = tail_decayed_rate(config.learning_rate, step, config.steps, config.tail_fraction, config.tail_decay)
        for i, (p, g) in enumerate(zip(params, grads)):
            states[i], params[i] = adam_step(states[i], p, g, hyper, lr)
        model = TinyInversionModel.from_parameters(params)
    logger.debug("inversion model trained: loss %.6g -> %.6g", losses[0], losses[-1])
    return model, losses


def train_inversion_model(
    backward_flow: np.ndarray,
    forward_flow: np.ndarray,
    forward_occlusion: np.ndarray,
    config: Optional[InversionTrainingConfig] = None,
) -> TinyInversionModel:
    """
    Train a fresh inversion model on the non-occluded forward flow.

    Args:
        backward_flow: flow t -> t-1
        forward_flow: flow t -> t+1 (the supervision)
        forward_occlusion: visibility of the forward flow; occluded pixels
            (0) contribute nothing to the loss
        config: steps, learning rate, Charbonnier constants, seed

    Raises:
        RejectedInputError: if no pixel is visible
    """
    model, _ = fit_inversion_model(backward_flow, forward_flow, forward_occlusion, config)
    return model


def inpaint_occluded_flow(
    forward_flow: np.ndarray,
    model: TinyInversionModel,
    backward_flow: np.ndarray,
    forward_occlusion: np.ndarray,
) -> SelfSupLabel:
    """O * forward + (1 - O) * model(backward), as a multi-frame label."""
    forward = as_flow(forward_flow, "forward_flow")
    backward = as_flow(backward_flow, "backward_flow")
    if backward.shape != forward.shape:
        raise RejectedInputError(f"backward {backward.shape[:2]} and forward {forward.shape[:2]} differ")
    visible = as_mask(forward_occlusion, forward.shape[:2], "forward_occlusion")[..., None]
    blended = visible * forward + (1.0 - visible) * model.predict(backward)
    return SelfSupLabel.create(
        blended, "multi_frame", inpainted_fraction=float(1.0 - visible.mean())
    )
