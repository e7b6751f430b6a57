"""Binary 3D morphology, hole filling, mask targets, and distance transforms.

Morphology uses 6-connectivity (face neighbors); voxels outside the grid
count as background, so erosion eats the grid boundary and dilation never
wraps. Distances are Euclidean between voxel centers, scaled per axis by
the voxel size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateInputError, ParameterError
from .grid import Grid, LabelCategory, LabelMap

_FACES = [
    (0, -1), (0, 1),
    (1, -1), (1, 1),
    (2, -1), (2, 1),
]


@dataclass(frozen=True)
class BinaryMask:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=bool)
        if data.shape != self.grid.dims:
            raise ParameterError(
                f"mask shape {data.shape} does not match grid dims {self.grid.dims}"
            )
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    def count(self) -> int:
        return int(self.data.sum())

    def volume_mm3(self) -> float:
        return self.count() * self.grid.voxel_volume


@dataclass(frozen=True)
class SignedDistanceVolume:
    """Per-voxel signed distance (mm) to the mask boundary; negative inside."""

    grid: Grid
    data: np.ndarray  # float64

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != self.grid.dims:
            raise ParameterError("distance data does not match grid dims")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)


def merge_brain_labels(labels: LabelMap) -> BinaryMask:
    """Voxels whose label category is brain (non-ventricular CSF excluded)."""
    brain_ids = labels.labels_in_category(LabelCategory.BRAIN)
    data = np.isin(labels.data, brain_ids)
    return BinaryMask(labels.grid, data)


def _dilate_once(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    for axis, step in _FACES:
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        if step < 0:
            src[axis] = slice(1, None)
            dst[axis] = slice(None, -1)
        else:
            src[axis] = slice(None, -1)
            dst[axis] = slice(1, None)
        out[tuple(dst)] |= a[tuple(src)]
    return out


def _erode_once(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    for axis, step in _FACES:
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        edge = [slice(None)] * 3
        if step < 0:
            src[axis] = slice(1, None)
            dst[axis] = slice(None, -1)
            edge[axis] = slice(-1, None)
        else:
            src[axis] = slice(None, -1)
            dst[axis] = slice(1, None)
            edge[axis] = slice(None, 1)
        out[tuple(dst)] &= a[tuple(src)]
        out[tuple(edge)] = False  # neighbor beyond the grid is background
    return out


def dilate(mask: BinaryMask, iters: int) -> BinaryMask:
    if iters < 0:
        raise ParameterError("iters must be >= 0")
    data = mask.data
    for _ in range(iters):
        data = _dilate_once(data)
    return BinaryMask(mask.grid, data)


def erode(mask: BinaryMask, iters: int) -> BinaryMask:
    if iters < 0:
        raise ParameterError("iters must be >= 0")
    data = mask.data
    for _ in range(iters):
        data = _erode_once(data)
    return BinaryMask(mask.grid, data)


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Fill background regions not 6-connected to the grid boundary."""
    bg = ~mask.data
    reached = np.zeros_like(bg)
    for axis in range(3):
        face = [slice(None)] * 3
        face[axis] = slice(0, 1)
        reached[tuple(face)] = bg[tuple(face)]
        face[axis] = slice(-1, None)
        reached[tuple(face)] = bg[tuple(face)]
    # propagate reachability with directional sweeps until stable
    while True:
        before = reached.sum()
        for axis in range(3):
            n = reached.shape[axis]
            sl = [slice(None)] * 3
            pr = [slice(None)] * 3
            for i in range(1, n):
                sl[axis] = i
                pr[axis] = i - 1
                reached[tuple(sl)] |= reached[tuple(pr)] & bg[tuple(sl)]
            for i in range(n - 2, -1, -1):
                sl[axis] = i
                pr[axis] = i + 1
                reached[tuple(sl)] |= reached[tuple(pr)] & bg[tuple(sl)]
        if reached.sum() == before:
            break
    return BinaryMask(mask.grid, mask.data | (bg & ~reached))


def derive_target_mask(labels: LabelMap, close_iters: int = 10) -> BinaryMask:
    """Training target: merge brain labels, close gaps, fill enclosed holes."""
    mask = merge_brain_labels(labels)
    mask = erode(dilate(mask, close_iters), close_iters)
    return fill_holes(mask)


def edt_squared(mask: BinaryMask) -> np.ndarray:
    """Exact squared distance (mm^2, float64) to the nearest true voxel."""
    if not mask.data.any():
        raise DegenerateInputError("EDT of an empty mask is undefined")
    return _kernels.edt_squared(mask.data, mask.grid.voxel_size)


def edt(mask: BinaryMask) -> np.ndarray:
    """Distance (mm, float64) to the nearest true voxel center.

    An empty mask has no finite distances; the grid diagonal (the largest
    possible within-grid distance) is substituted everywhere.
    """
    if not mask.data.any():
        extent = (np.asarray(mask.grid.dims) - 1) * np.asarray(mask.grid.voxel_size)
        return np.full(mask.grid.dims, float(np.linalg.norm(extent)))
    return np.sqrt(edt_squared(mask))


def sdt(mask: BinaryMask) -> SignedDistanceVolume:
    """Signed distance transform: negative inside the mask, positive outside."""
    if not mask.data.any() or mask.data.all():
        raise DegenerateInputError("SDT requires a mask that is neither empty nor full")
    inv = BinaryMask(mask.grid, ~mask.data)
    data = np.sqrt(edt_squared(mask)) - np.sqrt(edt_squared(inv))
    return SignedDistanceVolume(mask.grid, data)


def boundary_voxels(mask: BinaryMask) -> np.ndarray:
    """Coordinates (n, 3) of true voxels with a false 6-neighbor (grid edge counts)."""
    interior = _erode_once(mask.data)
    return np.argwhere(mask.data & ~interior)


def boundary_mask(mask: BinaryMask) -> BinaryMask:
    interior = _erode_once(mask.data)
    return BinaryMask(mask.grid, mask.data & ~interior)
