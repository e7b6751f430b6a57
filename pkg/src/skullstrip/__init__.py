"""Synthesis-driven training and evaluation toolkit for brain-mask extraction.

Renders highly variable head images from label maps, derives ground-truth
brain masks morphologically, trains a small 3D U-Net with Dice or weighted
distance-regression losses, and scores predictions with Dice overlap and
Hausdorff distances. Runs end to end on procedurally generated phantoms.
"""

from . import _kernels
from .grid import Grid, LabelCategory, LabelInfo, LabelMap, Volume, conform, sample
from .maskops import BinaryMask, SignedDistanceVolume
from .nifti import read_nifti, write_nifti
from .synth import SynthConfig, SynthSample, synthesize_sample

__version__ = "0.1.0"

__all__ = [
    "Grid", "LabelCategory", "LabelInfo", "LabelMap", "Volume", "conform",
    "sample", "BinaryMask", "SignedDistanceVolume", "read_nifti", "write_nifti",
    "SynthConfig", "SynthSample", "synthesize_sample", "__version__",
]


def kernel_backend() -> str:
    """Name of the active kernel backend ('native' or 'numpy')."""
    return _kernels.backend_name()
