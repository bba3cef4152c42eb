"""
Same-size 2-D convolution (cross-correlation) with zero padding, stride 1.

Fields are H x W x C_in, kernels k_h x k_w x C_in x C_out. The backward pass
returns gradients for input, kernel and bias; the tiny inversion model is
trained with it.
"""

from typing import NamedTuple, Optional

import numpy as np

from pysmurf.errors import RejectedInputError


class ConvGrads(NamedTuple):
    d_input: np.ndarray
    d_kernel: np.ndarray
    d_bias: np.ndarray


def _check(inputs: np.ndarray, kernel: np.ndarray) -> None:
    if inputs.ndim != 3:
        raise RejectedInputError(f"input must be H x W x C, got shape {inputs.shape}")
    if kernel.ndim != 4:
        raise RejectedInputError(f"kernel must be kh x kw x Cin x Cout, got {kernel.shape}")
    kh, kw, c_in, _ = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise RejectedInputError(f"kernel dimensions must be odd, got {kh} x {kw}")
    if c_in != inputs.shape[2]:
        raise RejectedInputError(
            f"kernel expects {c_in} input channels, input has {inputs.shape[2]}"
        )


def _pad(inputs: np.ndarray, kh: int, kw: int) -> np.ndarray:
    return np.pad(inputs, ((kh // 2, kh // 2), (kw // 2, kw // 2), (0, 0)))


def conv2d(
    inputs: np.ndarray,
    kernel: np.ndarray,
    bias: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Convolve a multi-channel field.

    Args:
        inputs: H x W x C_in
        kernel: k_h x k_w x C_in x C_out, odd spatial size
        bias: C_out vector (zeros when omitted)

    Returns:
        H x W x C_out
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    _check(inputs, kernel)
    height, width, _ = inputs.shape
    kh, kw, _, c_out = kernel.shape
    padded = _pad(inputs, kh, kw)

    out = np.zeros((height, width, c_out), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            out += padded[i:i + height, j:j + width, :] @ kernel[i, j]
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)
    return out


def conv2d_backward(
    inputs: np.ndarray,
    kernel: np.ndarray,
    grad_output: np.ndarray,
) -> ConvGrads:
    """Gradients of a scalar loss wrt input, kernel and bias of ``conv2d``."""
    inputs = np.asarray(inputs, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    grad_output = np.asarray(grad_output, dtype=np.float64)
    _check(inputs, kernel)
    height, width, c_in = inputs.shape
    kh, kw, _, c_out = kernel.shape
    if grad_output.shape != (height, width, c_out):
        raise RejectedInputError(
            f"grad_output shape {grad_output.shape} != {(height, width, c_out)}"
        )
    padded = _pad(inputs, kh, kw)
    flat_grad = grad_output.reshape(-1, c_out)

    d_padded = np.zeros_like(padded)
    d_kernel = np.zeros_like(kernel)
    for i in range(kh):
        for j in range(kw):
            window = padded[i:i + height, j:j + width, :].reshape(-1, c_in)
            d_kernel[i, j] = window.T @ flat_grad
            d_padded[i:i + height, j:j + width, :] += grad_output @ kernel[i, j].T
    d_input = d_padded[kh // 2:kh // 2 + height, kw // 2:kw // 2 + width, :]
    d_bias = flat_grad.sum(axis=0)
    return ConvGrads(d_input, d_kernel, d_bias)
