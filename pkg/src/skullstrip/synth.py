"""Generative model: spatial and intensity augmentation of label maps.

Each training image is rendered from a label map: the map is warped by a
random affine plus a smooth random displacement field, every label gets a
random mean intensity with shared Gaussian noise, and the image is pushed
through a chain of corruptions (multiplicative bias field, intensity
exponentiation, slab cropping, blurring, downsample/upsample) before a
final min-max normalization to [0, 1]. The variability is meant to exceed
what real scans show.

All randomness flows from one seed; a call is a pure function of
(label map, config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError, ParameterError
from .grid import Grid, LabelMap, Volume, _gather_nearest

_interval = tuple[float, float]


@dataclass(frozen=True)
class SynthConfig:
    """Sampling ranges of the generative model.

    Symmetric ranges (translation, rotation, shear, deformation, bias,
    cropping) are half-widths; interval fields are (low, high).
    """

    translation_range: float = 15.0     # mm
    rotation_range: float = 45.0        # degrees
    scale_range: _interval = (0.8, 1.3)
    shear_range: float = 0.1
    deform_ctrl_points: int = 8         # per axis
    deform_max_amp: float = 10.0        # mm
    intensity_mean_range: _interval = (25.0, 255.0)
    intensity_stddev_range: _interval = (0.0, 35.0)
    bias_ctrl_points: int = 4
    bias_max_log_amp: float = 0.5
    gamma_log_range: _interval = (-0.5, 0.5)
    crop_max_fraction: float = 0.25
    downsample_factors: tuple[int, ...] = (2, 3, 4)
    blur_sigma_range: _interval = (0.0, 2.0)  # mm
    prob_bias: float = 0.9
    prob_gamma: float = 0.9
    prob_crop: float = 0.5
    prob_downsample: float = 0.5
    prob_blur: float = 0.9

    def __post_init__(self):
        for name in ("scale_range", "intensity_mean_range", "intensity_stddev_range",
                     "gamma_log_range", "blur_sigma_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ParameterError(f"{name} must be ordered, got ({lo}, {hi})")
        if self.scale_range[0] <= 0:
            raise ParameterError("scale_range must be positive")
        for name in ("translation_range", "rotation_range", "shear_range",
                     "deform_max_amp", "bias_max_log_amp"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if not 0 <= self.crop_max_fraction < 1:
            raise ParameterError("crop_max_fraction must be in [0, 1)")
        if self.deform_ctrl_points < 2 or self.bias_ctrl_points < 2:
            raise ParameterError("control lattices need >= 2 points per axis")
        if any(f < 1 for f in self.downsample_factors):
            raise ParameterError("downsample factors must be >= 1")
        for name in ("prob_bias", "prob_gamma", "prob_crop", "prob_downsample",
                     "prob_blur"):
            if not 0 <= getattr(self, name) <= 1:
                raise ParameterError(f"{name} must be a probability")

    @classmethod
    def degenerate(cls) -> "SynthConfig":
        """All variability switched off; renders the label map directly."""
        return cls(
            translation_range=0.0, rotation_range=0.0, scale_range=(1.0, 1.0),
            shear_range=0.0, deform_max_amp=0.0,
            intensity_stddev_range=(0.0, 0.0), bias_max_log_amp=0.0,
            gamma_log_range=(0.0, 0.0), crop_max_fraction=0.0,
            downsample_factors=(1,), blur_sigma_range=(0.0, 0.0),
            prob_bias=0.0, prob_gamma=0.0, prob_crop=0.0,
            prob_downsample=0.0, prob_blur=0.0,
        )


@dataclass(frozen=True)
class DisplacementField:
    grid: Grid
    vectors: np.ndarray  # (dims..., 3), mm

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        if vec.shape != self.grid.dims + (3,):
            raise ParameterError("displacement shape must be dims + (3,)")
        if not np.all(np.isfinite(vec)):
            raise ParameterError("displacement field contains non-finite values")
        vec.flags.writeable = False
        object.__setattr__(self, "vectors", vec)


@dataclass(frozen=True)
class SynthSample:
    image: Volume
    warped_labels: LabelMap


def _rotation_matrix(angles_deg: np.ndarray) -> np.ndarray:
    ax, ay, az = np.deg2rad(angles_deg)
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rx @ ry @ rz


def sample_affine(rng: np.random.Generator, cfg: SynthConfig, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Random translation/rotation/scale/shear composed about ``center`` (world mm)."""
    t = rng.uniform(-cfg.translation_range, cfg.translation_range, 3)
    angles = rng.uniform(-cfg.rotation_range, cfg.rotation_range, 3)
    scales = rng.uniform(cfg.scale_range[0], cfg.scale_range[1], 3)
    shears = rng.uniform(-cfg.shear_range, cfg.shear_range, 3)

    rot = _rotation_matrix(angles)
    sc = np.diag(scales)
    sh = np.eye(3)
    sh[0, 1], sh[0, 2], sh[1, 2] = shears
    linear = rot @ sc @ sh

    center = np.asarray(center, dtype=np.float64)
    out = np.eye(4)
    out[:3, :3] = linear
    out[:3, 3] = center - linear @ center + t
    return out


def _interp_axis(data: np.ndarray, coords: np.ndarray, axis: int) -> np.ndarray:
    """Linear interpolation along one axis at clamped continuous coords."""
    n = data.shape[axis]
    if n == 1:
        reps = [1] * data.ndim
        reps[axis] = len(coords)
        return np.repeat(data, len(coords), axis=axis) if len(coords) != 1 else data
    c = np.clip(coords, 0.0, n - 1.0)
    lo = np.minimum(np.floor(c).astype(np.int64), n - 2)
    t = c - lo
    lower = np.take(data, lo, axis=axis)
    upper = np.take(data, lo + 1, axis=axis)
    shape = [1] * data.ndim
    shape[axis] = len(coords)
    t = t.reshape(shape)
    return lower * (1.0 - t) + upper * t


def upsample_lattice(lattice: np.ndarray, dims: tuple[int, int, int]) -> np.ndarray:
    """Trilinearly stretch a coarse lattice over a full voxel grid."""
    out = lattice.astype(np.float64)
    for axis in range(3):
        n = lattice.shape[axis]
        d = dims[axis]
        span = (n - 1.0) / (d - 1.0) if d > 1 else 0.0
        coords = np.arange(d, dtype=np.float64) * span
        out = _interp_axis(out, coords, axis)
    return out


def sample_deformation(rng: np.random.Generator, grid: Grid, cfg: SynthConfig) -> DisplacementField:
    """Smooth random displacement field from a coarse control lattice.

    Control values are uniform per axis within the amplitude; lattice points
    on the boundary faces are pinned to zero so the field vanishes at the
    grid edges.
    """
    n = cfg.deform_ctrl_points
    amp = cfg.deform_max_amp
    lat = rng.uniform(-amp, amp, size=(n, n, n, 3))
    lat[0, :, :, :] = 0.0
    lat[-1, :, :, :] = 0.0
    lat[:, 0, :, :] = 0.0
    lat[:, -1, :, :] = 0.0
    lat[:, :, 0, :] = 0.0
    lat[:, :, -1, :] = 0.0
    vectors = np.empty(grid.dims + (3,))
    for c in range(3):
        vectors[..., c] = upsample_lattice(lat[..., c], grid.dims)
    return DisplacementField(grid, vectors)


def warp_labelmap(labels: LabelMap, affine: np.ndarray, disp: DisplacementField) -> LabelMap:
    """Backward-warp a label map through an affine plus displacement (world mm).

    Output voxel v samples the input at affine(world(v)) + disp(v), with
    nearest-neighbor lookup; out-of-field voxels become label 0.
    """
    if disp.grid.dims != labels.grid.dims:
        raise ParameterError("displacement field must live on the label grid")
    g = labels.grid.affine
    try:
        g_inv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("label grid affine is not invertible") from exc
    affine = np.asarray(affine, dtype=np.float64)
    if affine.shape != (4, 4):
        raise ParameterError("affine must be 4x4")
    try:
        np.linalg.inv(affine)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("warp affine is not invertible") from exc

    vox_map = g_inv @ affine @ g          # voxel -> voxel, homogeneous
    vec_map = g_inv[:3, :3]               # world vectors -> voxel vectors

    dims = labels.grid.dims
    ii, jj, kk = np.meshgrid(*(np.arange(d, dtype=np.float64) for d in dims), indexing="ij")
    coords = np.stack([ii.ravel(), jj.ravel(), kk.ravel(), np.ones(ii.size)])
    pts = (vox_map @ coords)[:3]
    pts += vec_map @ disp.vectors.reshape(-1, 3).T
    data = _gather_nearest(labels.data, pts, fill=0).reshape(dims)
    return LabelMap(labels.grid, data, labels.schema)


def synth_intensities(labels: LabelMap, rng: np.random.Generator, cfg: SynthConfig) -> Volume:
    """Render a gray-scale image: one random mean per label, shared noise level.

    Means are drawn for every schema label in ascending id order, so the
    random stream does not depend on which labels survived warping.
    """
    ids = sorted(labels.schema)
    means = rng.uniform(cfg.intensity_mean_range[0], cfg.intensity_mean_range[1], len(ids))
    sigma = rng.uniform(cfg.intensity_stddev_range[0], cfg.intensity_stddev_range[1])
    lut = np.zeros(max(ids) + 1)
    for label, mu in zip(ids, means):
        lut[label] = mu
    img = lut[labels.data]
    if sigma > 0:
        img = img + sigma * rng.standard_normal(labels.grid.dims)
    return Volume(labels.grid, np.maximum(img, 0.0).astype(np.float32))


def apply_bias_field(vol: Volume, rng: np.random.Generator, cfg: SynthConfig) -> Volume:
    """Multiply by exp(B), B a smooth random log-amplitude field."""
    n = cfg.bias_ctrl_points
    a = cfg.bias_max_log_amp
    lat = rng.uniform(-a, a, size=(n, n, n))
    bias = np.exp(upsample_lattice(lat, vol.grid.dims))
    return Volume(vol.grid, (vol.data * bias).astype(np.float32))


def apply_gamma(vol: Volume, rng: np.random.Generator, cfg: SynthConfig) -> Volume:
    """Exponentiate normalized intensities by exp(g); preserves min and max."""
    g = rng.uniform(cfg.gamma_log_range[0], cfg.gamma_log_range[1])
    lo = float(vol.data.min())
    hi = float(vol.data.max())
    if hi <= lo:
        return vol
    norm = (vol.data.astype(np.float64) - lo) / (hi - lo)
    out = norm ** math.exp(g) * (hi - lo) + lo
    return Volume(vol.grid, out.astype(np.float32))


def _gaussian_blur(data: np.ndarray, sigma_mm: float, voxel_size) -> np.ndarray:
    out = data.astype(np.float64)
    for axis in range(3):
        sigma = sigma_mm / voxel_size[axis]
        radius = int(math.ceil(3.0 * sigma))
        if radius < 1:
            continue
        taps = np.arange(-radius, radius + 1, dtype=np.float64)
        kernel = np.exp(-0.5 * (taps / sigma) ** 2)
        kernel /= kernel.sum()
        pad = [(0, 0)] * 3
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad)
        acc = np.zeros_like(out)
        n = data.shape[axis]
        sl = [slice(None)] * 3
        for j, w in enumerate(kernel):
            sl[axis] = slice(j, j + n)
            acc += w * padded[tuple(sl)]
        out = acc
    return out


def _box_downsample_up(data: np.ndarray, factor: int) -> np.ndarray:
    """Box-average by ``factor`` then linearly resample back to the input grid."""
    low = data.astype(np.float64)
    for axis in range(3):
        n = low.shape[axis]
        starts = np.arange(0, n, factor)
        sums = np.add.reduceat(low, starts, axis=axis)
        counts = np.minimum(starts + factor, n) - starts
        shape = [1] * 3
        shape[axis] = len(starts)
        low = sums / counts.reshape(shape)
    out = low
    for axis in range(3):
        coords = (np.arange(data.shape[axis], dtype=np.float64) - (factor - 1) / 2.0) / factor
        out = _interp_axis(out, coords, axis)
    return out


def apply_resolution_corruption(vol: Volume, rng: np.random.Generator, cfg: SynthConfig) -> Volume:
    """Randomly degrade the field of view and resolution.

    In order: (a) zero out random outer slabs, (b) Gaussian blur, (c) box
    downsample and resample back. Each stage fires with its own probability.
    """
    data = vol.data.astype(np.float64)

    if rng.uniform() < cfg.prob_crop and cfg.crop_max_fraction > 0:
        fracs = rng.uniform(0.0, cfg.crop_max_fraction, size=6)
        for axis in range(3):
            n = data.shape[axis]
            lo = int(fracs[2 * axis] * n)
            hi = int(fracs[2 * axis + 1] * n)
            sl = [slice(None)] * 3
            if lo > 0:
                sl[axis] = slice(0, lo)
                data[tuple(sl)] = 0.0
            if hi > 0:
                sl[axis] = slice(n - hi, n)
                data[tuple(sl)] = 0.0

    if rng.uniform() < cfg.prob_blur:
        sigma = rng.uniform(cfg.blur_sigma_range[0], cfg.blur_sigma_range[1])
        if sigma > 0:
            data = _gaussian_blur(data, sigma, vol.grid.voxel_size)

    if rng.uniform() < cfg.prob_downsample and cfg.downsample_factors:
        factor = int(rng.choice(np.asarray(sorted(cfg.downsample_factors))))
        if factor > 1:
            data = _box_downsample_up(data, factor)

    return Volume(vol.grid, data.astype(np.float32))


def synthesize_sample(labels: LabelMap, cfg: SynthConfig, seed) -> SynthSample:
    """Full generative chain; pure function of (labels, cfg, seed).

    Stages: spatial warp, per-label intensities, bias field, exponentiation,
    resolution corruption, min-max normalization to [0, 1].
    """
    rng = np.random.default_rng(seed)
    affine = sample_affine(rng, cfg, center=labels.grid.world_center())
    disp = sample_deformation(rng, labels.grid, cfg)
    warped = warp_labelmap(labels, affine, disp)

    img = synth_intensities(warped, rng, cfg)
    if rng.uniform() < cfg.prob_bias:
        img = apply_bias_field(img, rng, cfg)
    if rng.uniform() < cfg.prob_gamma:
        img = apply_gamma(img, rng, cfg)
    img = apply_resolution_corruption(img, rng, cfg)

    data = img.data.astype(np.float64)
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        data = (data - lo) / (hi - lo)
    else:
        data = np.zeros_like(data)
    return SynthSample(Volume(labels.grid, data.astype(np.float32)), warped)
