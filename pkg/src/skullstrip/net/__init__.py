"""Minimal 3D convolutional network engine with hand-derived backprop."""

from .adam import AdamState, adam_step
from .modelio import load_model, save_model
from .predict import normalize_minmax, predict_mask, strip_image
from .train import LOSS_KINDS, TrainResult, TrainSettings, train
from .unet import UNetConfig, init_params, unet_backward, unet_forward

__all__ = [
    "AdamState", "adam_step", "load_model", "save_model", "normalize_minmax",
    "predict_mask", "strip_image", "LOSS_KINDS", "TrainResult", "TrainSettings",
    "train", "UNetConfig", "init_params", "unet_backward", "unet_forward",
]
