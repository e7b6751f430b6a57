"""Network building blocks with explicit backward passes.

Feature arrays are (channels, x, y, z). Convolutions dispatch to the kernel
backend (compiled or NumPy); everything else is cheap enough in NumPy.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import ParameterError


def conv3d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3x3 same-size cross-correlation with zero padding."""
    if x.ndim != 4 or w.ndim != 5:
        raise ParameterError("conv3d expects (ci,x,y,z) input and (co,ci,3,3,3) kernel")
    if w.shape[1] != x.shape[0]:
        raise ParameterError(
            f"kernel expects {w.shape[1]} input channels, got {x.shape[0]}"
        )
    if w.shape[2:] != (3, 3, 3):
        raise ParameterError("only 3x3x3 kernels are supported")
    return _kernels.conv3d_forward(
        np.ascontiguousarray(x), np.ascontiguousarray(w), np.ascontiguousarray(b)
    )


def conv3d_backward(x: np.ndarray, w: np.ndarray, gy: np.ndarray):
    """Gradients (gx, gw, gb) of conv3d_forward."""
    if gy.shape[0] != w.shape[0] or gy.shape[1:] != x.shape[1:]:
        raise ParameterError("grad_out shape does not match forward output")
    return _kernels.conv3d_backward(
        np.ascontiguousarray(x), np.ascontiguousarray(w), np.ascontiguousarray(gy)
    )


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_backward(x: np.ndarray, gy: np.ndarray, slope: float) -> np.ndarray:
    # exact zeros take the slope branch, matching the forward definition
    return np.where(x > 0, gy, slope * gy)


def maxpool2(x: np.ndarray):
    """2x2x2 max pooling; ties go to the lowest linear block index.

    Returns (pooled, argmax) where argmax indexes into each 2x2x2 block.
    """
    c, nx, ny, nz = x.shape
    if nx % 2 or ny % 2 or nz % 2:
        raise ParameterError(f"pooling requires even spatial dims, got {x.shape[1:]}")
    blocks = (
        x.reshape(c, nx // 2, 2, ny // 2, 2, nz // 2, 2)
        .transpose(0, 1, 3, 5, 2, 4, 6)
        .reshape(c, nx // 2, ny // 2, nz // 2, 8)
    )
    idx = blocks.argmax(axis=-1)
    pooled = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return pooled, idx


def maxpool2_backward(idx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Route gradients to the argmax voxel of each block."""
    c, hx, hy, hz = gy.shape
    blocks = np.zeros((c, hx, hy, hz, 8), dtype=gy.dtype)
    np.put_along_axis(blocks, idx[..., None], gy[..., None], axis=-1)
    return (
        blocks.reshape(c, hx, hy, hz, 2, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3, 6)
        .reshape(c, hx * 2, hy * 2, hz * 2)
    )


def upsample2(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor 2x upsampling of each spatial axis."""
    return x.repeat(2, axis=1).repeat(2, axis=2).repeat(2, axis=3)


def upsample2_backward(gy: np.ndarray) -> np.ndarray:
    """Sum gradients over each 2x2x2 block."""
    c, nx, ny, nz = gy.shape
    return (
        gy.reshape(c, nx // 2, 2, ny // 2, 2, nz // 2, 2)
        .sum(axis=(2, 4, 6))
    )


def softmax_channels(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def softmax_channels_backward(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    dot = (gy * y).sum(axis=0, keepdims=True)
    return y * (gy - dot)
