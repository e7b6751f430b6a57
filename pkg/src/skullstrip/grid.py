"""Volumetric grids, image and label containers, sampling, and conforming.

Arrays are indexed ``(i, j, k)`` in C order. The anatomical meaning of each
voxel axis is carried by a three-letter orientation code (e.g. ``"LIA"``):
letter ``n`` names the world direction that voxel axis ``n`` points towards,
in a RAS+ world coordinate system measured in millimetres. The ``affine``
maps homogeneous voxel indices to world coordinates.

All containers are immutable after construction; operations return new
objects and are safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GeometryError, ParameterError, SchemaError

_LETTER_TO_VECTOR = {
    "R": (1.0, 0.0, 0.0),
    "L": (-1.0, 0.0, 0.0),
    "A": (0.0, 1.0, 0.0),
    "P": (0.0, -1.0, 0.0),
    "S": (0.0, 0.0, 1.0),
    "I": (0.0, 0.0, -1.0),
}

# (world axis, positive?) -> letter
_AXIS_TO_LETTER = {
    (0, True): "R",
    (0, False): "L",
    (1, True): "A",
    (1, False): "P",
    (2, True): "S",
    (2, False): "I",
}


class LabelCategory(str, Enum):
    BRAIN = "brain"
    CSF_NONVENTRICULAR = "csf_nonventricular"
    NONBRAIN_SYNTHETIC = "nonbrain_synthetic"
    BACKGROUND = "background"


@dataclass(frozen=True)
class LabelInfo:
    name: str
    category: LabelCategory


# label id -> LabelInfo; id 0 must be the background label
Schema = dict[int, LabelInfo]


def orientation_matrix(orientation: str) -> np.ndarray:
    """3x3 matrix whose column n is the world unit vector of voxel axis n."""
    if len(orientation) != 3:
        raise GeometryError(f"orientation code must have 3 letters: {orientation!r}")
    cols = []
    axes = set()
    for letter in orientation.upper():
        if letter not in _LETTER_TO_VECTOR:
            raise GeometryError(f"unknown orientation letter {letter!r}")
        vec = _LETTER_TO_VECTOR[letter]
        cols.append(vec)
        axes.add(int(np.argmax(np.abs(vec))))
    if len(axes) != 3:
        raise GeometryError(f"orientation {orientation!r} does not span 3 axes")
    return np.array(cols, dtype=np.float64).T


def orientation_from_affine(affine: np.ndarray) -> str:
    """Dominant-axis orientation code of a voxel-to-world affine."""
    letters = []
    rot = np.asarray(affine, dtype=np.float64)[:3, :3]
    for j in range(3):
        col = rot[:, j]
        axis = int(np.argmax(np.abs(col)))
        letters.append(_AXIS_TO_LETTER[(axis, col[axis] > 0)])
    return "".join(letters)


@dataclass(frozen=True)
class Grid:
    """Voxel lattice geometry: shape, spacing, orientation, world mapping."""

    dims: tuple[int, int, int]
    voxel_size: tuple[float, float, float]
    orientation: str
    affine: np.ndarray  # 4x4 voxel-to-world, mm

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        vsize = tuple(float(s) for s in self.voxel_size)
        if any(d < 1 for d in dims):
            raise GeometryError(f"grid dims must be >= 1, got {dims}")
        if any(s <= 0 for s in vsize):
            raise GeometryError(f"voxel size must be positive, got {vsize}")
        affine = np.array(self.affine, dtype=np.float64)
        if affine.shape != (4, 4):
            raise GeometryError("affine must be 4x4")
        norms = np.linalg.norm(affine[:3, :3], axis=0)
        if not np.allclose(norms, vsize, rtol=1e-5, atol=0.0):
            raise GeometryError(
                f"affine column norms {norms} do not match voxel size {vsize}"
            )
        affine.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "voxel_size", vsize)
        object.__setattr__(self, "orientation", str(self.orientation).upper())
        object.__setattr__(self, "affine", affine)

    @classmethod
    def standard(cls, dims, voxel_size=1.0, orientation="LIA") -> "Grid":
        """Grid with the given orientation, centered on the world origin."""
        dims = tuple(int(d) for d in (dims if np.iterable(dims) else (dims,) * 3))
        if np.iterable(voxel_size):
            vsize = tuple(float(s) for s in voxel_size)
        else:
            vsize = (float(voxel_size),) * 3
        rot = orientation_matrix(orientation) * np.asarray(vsize)
        affine = np.eye(4)
        affine[:3, :3] = rot
        center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
        affine[:3, 3] = -rot @ center
        return cls(dims, vsize, orientation, affine)

    @classmethod
    def from_affine(cls, dims, affine) -> "Grid":
        affine = np.asarray(affine, dtype=np.float64)
        vsize = tuple(np.linalg.norm(affine[:3, :3], axis=0))
        return cls(tuple(dims), vsize, orientation_from_affine(affine), affine)

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.voxel_size))

    def world_to_voxel_matrix(self) -> np.ndarray:
        try:
            return np.linalg.inv(self.affine)
        except np.linalg.LinAlgError as exc:
            raise GeometryError("grid affine is not invertible") from exc

    def world_center(self) -> np.ndarray:
        mid = np.append((np.asarray(self.dims, dtype=np.float64) - 1.0) / 2.0, 1.0)
        return (self.affine @ mid)[:3]

    def same_geometry(self, other: "Grid", tol: float = 1e-9) -> bool:
        return self.dims == other.dims and bool(
            np.allclose(self.affine, other.affine, rtol=0.0, atol=tol)
        )


@dataclass(frozen=True)
class Volume:
    """3D scalar field (float32) on a grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.shape != self.grid.dims:
            raise GeometryError(
                f"data shape {data.shape} does not match grid dims {self.grid.dims}"
            )
        if not np.all(np.isfinite(data)):
            raise ParameterError("volume data contains non-finite values")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class LabelMap:
    """3D integer field on a grid plus a schema describing each label id."""

    grid: Grid
    data: np.ndarray
    schema: Schema

    def __post_init__(self):
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            raise ParameterError("label data must be integer-typed")
        data = data.astype(np.int32, copy=False)
        if data.shape != self.grid.dims:
            raise GeometryError(
                f"data shape {data.shape} does not match grid dims {self.grid.dims}"
            )
        if data.min(initial=0) < 0:
            raise ParameterError("label values must be non-negative")
        present = np.unique(data)
        missing = [int(v) for v in present if int(v) not in self.schema]
        if missing:
            raise SchemaError(f"labels {missing} missing from schema")
        if 0 in self.schema and self.schema[0].category != LabelCategory.BACKGROUND:
            raise SchemaError("label 0 must be the background label")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "schema", dict(self.schema))

    def labels_in_category(self, category: LabelCategory) -> list[int]:
        return sorted(k for k, v in self.schema.items() if v.category == category)


def _gather_nearest(data: np.ndarray, coords: np.ndarray, fill=0):
    """Nearest-neighbor lookup at continuous voxel coords (3, n); OOB -> fill."""
    idx = np.rint(coords).astype(np.int64)
    dims = data.shape
    valid = (
        (idx[0] >= 0) & (idx[0] < dims[0])
        & (idx[1] >= 0) & (idx[1] < dims[1])
        & (idx[2] >= 0) & (idx[2] < dims[2])
    )
    out = np.full(coords.shape[1], fill, dtype=data.dtype)
    iv = idx[:, valid]
    out[valid] = data[iv[0], iv[1], iv[2]]
    return out


def _gather_trilinear(data: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at continuous voxel coords (3, n); OOB -> 0."""
    dims = data.shape
    base = np.floor(coords).astype(np.int64)
    frac = coords - base
    out = np.zeros(coords.shape[1], dtype=np.float64)
    for corner in range(8):
        off = np.array([(corner >> 2) & 1, (corner >> 1) & 1, corner & 1])
        idx = base + off[:, None]
        w = np.ones(coords.shape[1], dtype=np.float64)
        for a in range(3):
            w *= frac[a] if off[a] else (1.0 - frac[a])
        valid = (
            (idx[0] >= 0) & (idx[0] < dims[0])
            & (idx[1] >= 0) & (idx[1] < dims[1])
            & (idx[2] >= 0) & (idx[2] < dims[2])
        )
        if not valid.any():
            continue
        iv = idx[:, valid]
        out[valid] += w[valid] * data[iv[0], iv[1], iv[2]].astype(np.float64)
    return out


def sample(vol: Volume, point, interp: str = "trilinear") -> float:
    """Sample a volume at one continuous voxel coordinate; out of bounds -> 0."""
    coords = np.asarray(point, dtype=np.float64).reshape(3, 1)
    if interp == "trilinear":
        return float(_gather_trilinear(vol.data, coords)[0])
    if interp == "nearest":
        return float(_gather_nearest(vol.data, coords)[0])
    raise ParameterError(f"unknown interpolation {interp!r}")


def _voxel_coords_chunks(dims, chunk_voxels=2_000_000):
    """Yield (slice along axis 0, homogeneous voxel coords (4, n)) chunks."""
    nx, ny, nz = dims
    per_slab = ny * nz
    step = max(1, chunk_voxels // per_slab)
    jj, kk = np.meshgrid(np.arange(ny), np.arange(nz), indexing="ij")
    for x0 in range(0, nx, step):
        x1 = min(nx, x0 + step)
        n = (x1 - x0) * per_slab
        ii = np.repeat(np.arange(x0, x1), per_slab)
        coords = np.empty((4, n), dtype=np.float64)
        coords[0] = ii
        coords[1] = np.tile(jj.ravel(), x1 - x0)
        coords[2] = np.tile(kk.ravel(), x1 - x0)
        coords[3] = 1.0
        yield slice(x0, x1), coords


def resample_to_grid(data: np.ndarray, src: Grid, dst: Grid, interp: str) -> np.ndarray:
    """Resample ``data`` (on grid ``src``) onto ``dst`` through world space."""
    mapping = src.world_to_voxel_matrix() @ dst.affine
    if interp == "trilinear":
        out = np.empty(dst.dims, dtype=np.float64)
    elif interp == "nearest":
        out = np.empty(dst.dims, dtype=data.dtype)
    else:
        raise ParameterError(f"unknown interpolation {interp!r}")
    for sl, coords in _voxel_coords_chunks(dst.dims):
        pts = (mapping @ coords)[:3]
        if interp == "trilinear":
            vals = _gather_trilinear(data, pts)
        else:
            vals = _gather_nearest(data, pts)
        out[sl] = vals.reshape((sl.stop - sl.start,) + dst.dims[1:])
    return out


def conform_target(src: Grid, dims, voxel_size=1.0, orientation="LIA") -> Grid:
    """Target grid with given shape/spacing/orientation, centered on ``src``."""
    dims = tuple(int(d) for d in (dims if np.iterable(dims) else (dims,) * 3))
    if np.iterable(voxel_size):
        vsize = tuple(float(s) for s in voxel_size)
    else:
        vsize = (float(voxel_size),) * 3
    rot = orientation_matrix(orientation) * np.asarray(vsize)
    affine = np.eye(4)
    affine[:3, :3] = rot
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
    affine[:3, 3] = src.world_center() - rot @ center
    return Grid(dims, vsize, orientation, affine)


def conform(obj, target: Grid, interp: str | None = None):
    """Resample a Volume or LabelMap onto ``target``; out-of-field voxels are 0.

    Label maps must use nearest-neighbor lookup so no new labels are invented.
    Inputs already on the target grid are returned unchanged (same data).
    """
    if isinstance(obj, LabelMap):
        if interp not in (None, "nearest"):
            raise ParameterError("label maps must be conformed with nearest")
        if obj.grid.same_geometry(target):
            return LabelMap(target, obj.data, obj.schema)
        data = resample_to_grid(obj.data, obj.grid, target, "nearest")
        return LabelMap(target, data, obj.schema)
    if isinstance(obj, Volume):
        interp = interp or "trilinear"
        if obj.grid.same_geometry(target):
            return Volume(target, obj.data)
        data = resample_to_grid(obj.data, obj.grid, target, interp)
        return Volume(target, data.astype(np.float32))
    raise ParameterError(f"cannot conform object of type {type(obj).__name__}")
