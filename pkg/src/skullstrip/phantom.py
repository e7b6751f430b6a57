"""Procedural head phantoms.

Stands in for clinical whole-head label maps: concentric head shells
(scalp, skull, CSF) around a nested brain (cortex, white matter, deep gray,
ventricles) plus a neck/shoulder slab, each with randomized centers, axes,
and sinusoidal surface ripples. Shell surfaces share one shape function so
nesting holds by construction.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grid import Grid, LabelCategory, LabelInfo, LabelMap

LBL_WHITE = 1
LBL_CORTEX = 2
LBL_DEEP_GRAY = 3
LBL_VENTRICLE = 4
LBL_CSF = 5
LBL_SKULL = 6
LBL_SCALP = 7
LBL_NECK = 8

PHANTOM_SCHEMA = {
    0: LabelInfo("background", LabelCategory.BACKGROUND),
    LBL_WHITE: LabelInfo("white_matter", LabelCategory.BRAIN),
    LBL_CORTEX: LabelInfo("cortex", LabelCategory.BRAIN),
    LBL_DEEP_GRAY: LabelInfo("deep_gray", LabelCategory.BRAIN),
    LBL_VENTRICLE: LabelInfo("ventricle", LabelCategory.BRAIN),
    LBL_CSF: LabelInfo("csf", LabelCategory.CSF_NONVENTRICULAR),
    LBL_SKULL: LabelInfo("skull", LabelCategory.NONBRAIN_SYNTHETIC),
    LBL_SCALP: LabelInfo("scalp", LabelCategory.NONBRAIN_SYNTHETIC),
    LBL_NECK: LabelInfo("neck", LabelCategory.NONBRAIN_SYNTHETIC),
}

# outer-surface radii as fractions of half the smallest grid extent
_SHELL_FRACS = {
    LBL_SCALP: 0.92,
    LBL_SKULL: 0.84,
    LBL_CSF: 0.76,
    LBL_CORTEX: 0.70,
}


def _ripple(rng, coords, amp, max_freq=4):
    """Smooth angular modulation of a surface radius, in [-amp, amp]."""
    x, y, z = coords
    r = np.sqrt(x**2 + y**2 + z**2) + 1e-9
    theta = np.arctan2(y, x)
    phi = np.arccos(np.clip(z / r, -1.0, 1.0))
    f1, f2 = rng.integers(2, max_freq + 1, 2)
    p1, p2 = rng.uniform(0.0, 2.0 * np.pi, 2)
    a = rng.uniform(0.5, 1.0) * amp
    return a * np.sin(f1 * theta + p1) * np.sin(f2 * phi + p2)


def _ellipsoid_rho(coords, center, semi_axes):
    x, y, z = coords
    return np.sqrt(
        ((x - center[0]) / semi_axes[0]) ** 2
        + ((y - center[1]) / semi_axes[1]) ** 2
        + ((z - center[2]) / semi_axes[2]) ** 2
    )


def make_phantom_labelmap(seed, dims=(32, 32, 32)) -> LabelMap:
    """Random head phantom on a 1 mm LIA grid; deterministic given seed."""
    dims = tuple(int(d) for d in (dims if np.iterable(dims) else (dims,) * 3))
    if any(d < 32 for d in dims):
        raise ParameterError(f"phantom dims must be >= 32 per axis, got {dims}")
    rng = np.random.default_rng(seed)
    grid = Grid.standard(dims, 1.0, "LIA")
    radius = min(dims) / 2.0

    axes_idx = np.meshgrid(*(np.arange(d, dtype=np.float64) for d in dims), indexing="ij")
    mid = [(d - 1) / 2.0 for d in dims]

    head_center = [m + rng.uniform(-0.04, 0.04) * radius for m in mid]
    head_axes = radius * rng.uniform(0.9, 1.05, 3)
    head_coords = [a - c for a, c in zip(axes_idx, head_center)]
    head_shape = 1.0 + _ripple(rng, head_coords, amp=0.06)
    head_rho = _ellipsoid_rho(axes_idx, head_center, head_axes)

    # inner brain structures: independent small ellipsoids, kept nested
    white_center = [c + rng.uniform(-0.03, 0.03) * radius for c in head_center]
    white_axes = 0.52 * radius * rng.uniform(0.92, 1.05, 3)
    white_coords = [a - c for a, c in zip(axes_idx, white_center)]
    white_rho = _ellipsoid_rho(axes_idx, white_center, white_axes)
    white_shape = 1.0 + _ripple(rng, white_coords, amp=0.05)

    deep_center = [c + rng.uniform(-0.06, 0.06) * radius for c in white_center]
    deep_axes = 0.26 * radius * rng.uniform(0.9, 1.1, 3)
    deep_rho = _ellipsoid_rho(axes_idx, deep_center, deep_axes)

    vent_center = [c + rng.uniform(-0.02, 0.02) * radius for c in deep_center]
    vent_axes = 0.13 * radius * rng.uniform(0.9, 1.1, 3)
    vent_rho = _ellipsoid_rho(axes_idx, vent_center, vent_axes)

    # neck/shoulder slab toward the inferior face (axis 1 for LIA)
    neck_start = int(0.80 * dims[1]) + rng.integers(-1, 2)
    neck_semi = (0.48 * dims[0] * rng.uniform(0.9, 1.05),
                 0.40 * dims[2] * rng.uniform(0.9, 1.05))
    neck_rho = np.sqrt(
        ((axes_idx[0] - head_center[0]) / neck_semi[0]) ** 2
        + ((axes_idx[2] - head_center[2]) / neck_semi[1]) ** 2
    )

    data = np.zeros(dims, dtype=np.int32)
    data[(axes_idx[1] >= neck_start) & (neck_rho <= 1.0)] = LBL_NECK
    for label in (LBL_SCALP, LBL_SKULL, LBL_CSF, LBL_CORTEX):
        data[head_rho <= _SHELL_FRACS[label] * head_shape] = label
    data[white_rho <= white_shape] = LBL_WHITE
    data[deep_rho <= 1.0] = LBL_DEEP_GRAY
    data[vent_rho <= 1.0] = LBL_VENTRICLE

    present = {PHANTOM_SCHEMA[v].category for v in np.unique(data)}
    if len(present) != len(LabelCategory):
        raise ParameterError(
            f"phantom construction degenerate for dims {dims}: "
            f"missing categories {set(LabelCategory) - present}"
        )
    return LabelMap(grid, data, PHANTOM_SCHEMA)
