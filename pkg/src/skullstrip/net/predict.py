"""Inference: turn a trained network into a brain mask and a stripped image."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..grid import Volume
from ..maskops import BinaryMask
from .unet import UNetConfig, unet_forward


def predict_mask(params, cfg: UNetConfig, vol: Volume) -> BinaryMask:
    """Threshold the network output into a binary brain mask.

    Softmax head: brain-channel probability strictly above 0.5; exact ties
    (e.g. an all-zero network) are background. Distance head: predicted
    signed distance strictly below 0.
    """
    if vol.data.shape != (cfg.input_size,) * 3:
        raise ParameterError(
            f"volume shape {vol.data.shape} does not match input_size {cfg.input_size}"
        )
    out, _ = unet_forward(params, cfg, vol.data.astype(np.float32))
    if cfg.head == "softmax2":
        mask = out[0] > 0.5
    else:
        mask = out[0] < 0.0
    return BinaryMask(vol.grid, mask)


def strip_image(vol: Volume, mask: BinaryMask) -> Volume:
    """Voxel-wise product of image and mask."""
    return Volume(vol.grid, vol.data * mask.data.astype(np.float32))


def normalize_minmax(vol: Volume) -> Volume:
    """Scale intensities to [0, 1], the range the network was trained on."""
    lo = float(vol.data.min())
    hi = float(vol.data.max())
    if hi <= lo:
        return Volume(vol.grid, np.zeros_like(vol.data))
    return Volume(vol.grid, (vol.data - lo) / (hi - lo))
