"""Training objectives with analytic gradients.

Both losses return the scalar value together with the gradient with respect
to the prediction itself (post-activation); chaining through the network
head is the caller's job.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ParameterError


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray


def dice_loss(target: np.ndarray, pred: np.ndarray, eps: float = 0.0) -> LossResult:
    """Two-channel soft Dice loss in [-1, 0]; -1 at a perfect prediction.

    value = -2 * sum(target * pred) / sum(target^2 + pred^2), summed over
    both channels and all voxels. ``eps`` pads the denominator (default off;
    valid softmax inputs keep it strictly positive).
    """
    if target.shape != pred.shape:
        raise ParameterError("target and prediction shapes differ")
    t = target.astype(np.float64, copy=False)
    p = pred.astype(np.float64, copy=False)
    num = float((t * p).sum())
    den = float((t * t).sum() + (p * p).sum()) + eps
    if den <= 0:
        raise DegenerateInputError("dice denominator is zero")
    value = -2.0 * num / den
    grad = (-2.0 / den) * t + (4.0 * num / den**2) * p
    return LossResult(value, grad)


def wsdt_loss(target: np.ndarray, pred: np.ndarray, b: float, h: float) -> LossResult:
    """Mean squared error on a signed distance map, down-weighted off-boundary.

    Voxels with |target| <= h mm keep weight 1; farther voxels get weight b.
    ``b = 1`` recovers the plain (unweighted) MSE.
    """
    if target.shape != pred.shape:
        raise ParameterError("target and prediction shapes differ")
    if not 0.0 <= b <= 1.0:
        raise ParameterError("weight b must be in [0, 1]")
    if h < 0:
        raise ParameterError("distance h must be >= 0")
    t = target.astype(np.float64, copy=False)
    p = pred.astype(np.float64, copy=False)
    w = np.where(np.abs(t) <= h, 1.0, b)
    diff = p - t
    n = t.size
    value = float((w * diff * diff).sum() / n)
    grad = (2.0 / n) * w * diff
    return LossResult(value, grad)


def usdt_loss(target: np.ndarray, pred: np.ndarray) -> LossResult:
    """Unweighted SDT regression: plain voxel-mean MSE."""
    return wsdt_loss(target, pred, b=1.0, h=0.0)
