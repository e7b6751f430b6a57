"""Minimal NIfTI-1 reader/writer.

Supported subset: single-file ``.nii`` / ``.nii.gz`` images, datatype codes
2 (uint8), 4 (int16), and 16 (float32), up to 4 header dims with trailing
dims of size 1. Geometry is taken from the sform rows when present
(``sform_code > 0``); the qform is ignored. Files are written little-endian
with the payload immediately after the 348-byte header.

Label maps carry their schema in a JSON sidecar ``<stem>.labels.json`` next
to the image, since the NIfTI header has no room for one.
"""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, SchemaError, UnsupportedError
from .grid import Grid, LabelCategory, LabelInfo, LabelMap, Schema, Volume

HEADER_SIZE = 348

_DTYPE_OF_CODE = {2: np.uint8, 4: np.int16, 16: np.float32}
_BITPIX_OF_CODE = {2: 8, 4: 16, 16: 32}


def _sidecar_path(path) -> Path:
    name = Path(path).name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    return Path(path).parent / (name + ".labels.json")


def write_schema(schema: Schema, path) -> None:
    payload = {
        "labels": {
            str(k): {"name": v.name, "category": v.category.value}
            for k, v in sorted(schema.items())
        }
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_schema(path) -> Schema:
    payload = json.loads(Path(path).read_text())
    try:
        return {
            int(k): LabelInfo(v["name"], LabelCategory(v["category"]))
            for k, v in payload["labels"].items()
        }
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad label schema file {path}: {exc}") from exc


def _pack_header(dims, voxel_size, affine, datatype) -> bytes:
    hdr = bytearray(HEADER_SIZE)
    struct.pack_into("<i", hdr, 0, HEADER_SIZE)
    hdr[38] = ord("r")  # regular
    dim = [3, dims[0], dims[1], dims[2], 1, 1, 1, 1]
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<h", hdr, 70, datatype)
    struct.pack_into("<h", hdr, 72, _BITPIX_OF_CODE[datatype])
    pixdim = [1.0, voxel_size[0], voxel_size[1], voxel_size[2], 0, 0, 0, 0]
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, float(HEADER_SIZE))  # vox_offset
    struct.pack_into("<b", hdr, 123, 2)  # xyzt_units: mm
    descrip = b"skullstrip"
    hdr[148 : 148 + len(descrip)] = descrip
    struct.pack_into("<h", hdr, 252, 0)  # qform_code
    struct.pack_into("<h", hdr, 254, 1)  # sform_code
    aff = np.asarray(affine, dtype=np.float64)
    struct.pack_into("<4f", hdr, 280, *aff[0, :])
    struct.pack_into("<4f", hdr, 296, *aff[1, :])
    struct.pack_into("<4f", hdr, 312, *aff[2, :])
    hdr[344:348] = b"n+1\x00"
    return bytes(hdr)


def write_nifti(obj, path) -> None:
    """Write a Volume or LabelMap as single-file NIfTI-1 (gzip if ``.gz``).

    Volumes are stored as float32. Label maps are stored as uint8 when the
    largest label fits, else int16, and their schema goes to a JSON sidecar.
    """
    path = Path(path)
    if isinstance(obj, LabelMap):
        top = int(obj.data.max(initial=0))
        if top <= 255:
            datatype = 2
        elif top <= 32767:
            datatype = 4
        else:
            raise UnsupportedError(f"label id {top} exceeds int16 storage")
        payload = obj.data.astype(_DTYPE_OF_CODE[datatype])
    elif isinstance(obj, Volume):
        datatype = 16
        payload = obj.data
    else:
        raise UnsupportedError(f"cannot write object of type {type(obj).__name__}")

    hdr = _pack_header(obj.grid.dims, obj.grid.voxel_size, obj.grid.affine, datatype)
    raw = hdr + np.ascontiguousarray(payload).ravel(order="F").tobytes()
    if path.name.endswith(".gz"):
        with open(path, "wb") as f:
            # fixed mtime and no embedded name keep outputs byte-reproducible
            with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                gz.write(raw)
    else:
        path.write_bytes(raw)
    if isinstance(obj, LabelMap):
        write_schema(obj.schema, _sidecar_path(path))


def _read_raw(path) -> bytes:
    with open(path, "rb") as f:
        head = f.read(2)
        f.seek(0)
        if head == b"\x1f\x8b":
            with gzip.GzipFile(fileobj=f) as gz:
                return gz.read()
        return f.read()


def read_nifti(path, as_labels: bool = False, schema: Schema | None = None):
    """Read a NIfTI-1 file as a Volume, or as a LabelMap if requested.

    With ``as_labels=True`` the file must hold an integer datatype and a
    schema must be available (argument or ``<stem>.labels.json`` sidecar).
    """
    raw = _read_raw(path)
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than a NIfTI-1 header")

    order = "<"
    (sizeof_hdr,) = struct.unpack_from("<i", raw, 0)
    if sizeof_hdr != HEADER_SIZE:
        (sizeof_hdr,) = struct.unpack_from(">i", raw, 0)
        if sizeof_hdr != HEADER_SIZE:
            raise FormatError(f"{path}: not a NIfTI-1 file (sizeof_hdr)")
        order = ">"

    magic = raw[344:348]
    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise FormatError(f"{path}: bad NIfTI magic {magic!r}")

    dim = struct.unpack_from(order + "8h", raw, 40)
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise FormatError(f"{path}: invalid dim[0]={ndim}")
    if ndim > 3 and any(d > 1 for d in dim[4 : 1 + ndim]):
        raise UnsupportedError(f"{path}: more than 3 non-trivial dims")
    dims = tuple(max(1, d) for d in dim[1:4])

    (datatype,) = struct.unpack_from(order + "h", raw, 70)
    if datatype not in _DTYPE_OF_CODE:
        raise UnsupportedError(f"{path}: unsupported datatype code {datatype}")

    pixdim = struct.unpack_from(order + "8f", raw, 76)
    (vox_offset,) = struct.unpack_from(order + "f", raw, 108)
    offset = int(round(vox_offset))
    if offset < HEADER_SIZE:
        offset = HEADER_SIZE

    (sform_code,) = struct.unpack_from(order + "h", raw, 254)
    if sform_code > 0:
        rows = [struct.unpack_from(order + "4f", raw, 280 + 16 * r) for r in range(3)]
        affine = np.array(rows + [[0.0, 0.0, 0.0, 1.0]], dtype=np.float64)
    else:
        affine = np.diag([pixdim[1] or 1.0, pixdim[2] or 1.0, pixdim[3] or 1.0, 1.0])
    grid = Grid.from_affine(dims, affine)

    dtype = np.dtype(_DTYPE_OF_CODE[datatype]).newbyteorder(order)
    count = int(np.prod(dims))
    end = offset + count * dtype.itemsize
    if len(raw) < end:
        raise FormatError(f"{path}: payload truncated ({len(raw)} < {end} bytes)")
    data = np.frombuffer(raw[offset:end], dtype=dtype).reshape(dims, order="F")
    data = np.ascontiguousarray(data, dtype=data.dtype.newbyteorder("="))

    if as_labels:
        if datatype == 16:
            raise UnsupportedError(f"{path}: float32 image cannot be read as labels")
        if schema is None:
            sidecar = _sidecar_path(path)
            if not sidecar.exists():
                raise SchemaError(
                    f"{path}: no schema given and no sidecar {sidecar.name} found"
                )
            schema = read_schema(sidecar)
        return LabelMap(grid, data.astype(np.int32), schema)
    return Volume(grid, data.astype(np.float32))
