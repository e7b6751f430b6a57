"""Model file format: versioned container for config plus named tensors.

Layout (all little-endian):
  8 bytes   magic "U3NETMDL"
  u32       format version (1)
  u32       length of the JSON-encoded config, then that many bytes
  u32       tensor count
  per tensor:
    u16     name length, then UTF-8 name
    u8      rank, then rank * u32 dims
    float32 payload in C order

Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .unet import UNetConfig, check_params

MAGIC = b"U3NETMDL"
VERSION = 1


def save_model(path, cfg: UNetConfig, params: dict[str, np.ndarray]) -> None:
    check_params(cfg, params)
    cfg_json = json.dumps(asdict(cfg), sort_keys=True).encode()
    chunks = [MAGIC, struct.pack("<I", VERSION),
              struct.pack("<I", len(cfg_json)), cfg_json,
              struct.pack("<I", len(params))]
    for name, tensor in params.items():
        raw = name.encode()
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", tensor.ndim))
        chunks.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path, expected: UNetConfig | None = None):
    """Read a model file; returns (UNetConfig, params).

    When ``expected`` is given, every config field must match, and the error
    names the first field that does not.
    """
    raw = Path(path).read_bytes()
    view = memoryview(raw)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(raw):
            raise FormatError(f"{path}: model file truncated at byte {pos}")
        out = view[pos : pos + n]
        pos += n
        return out

    if bytes(take(8)) != MAGIC:
        raise FormatError(f"{path}: not a model file (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported model format version {version}")
    (cfg_len,) = struct.unpack("<I", take(4))
    try:
        cfg_dict = json.loads(bytes(take(cfg_len)).decode())
        cfg_dict["features_per_level"] = tuple(cfg_dict["features_per_level"])
        cfg = UNetConfig(**cfg_dict)
    except (ValueError, TypeError, KeyError) as exc:
        raise FormatError(f"{path}: bad embedded config: {exc}") from exc

    if expected is not None:
        for key, want in asdict(expected).items():
            got = getattr(cfg, key)
            if isinstance(want, (list, tuple)):
                mismatch = tuple(got) != tuple(want)
            else:
                mismatch = got != want
            if mismatch:
                raise FormatError(
                    f"{path}: config field {key!r} is {got!r}, expected {want!r}"
                )

    (count,) = struct.unpack("<I", take(4))
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode()
        (rank,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        size = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(take(4 * size), dtype="<f4").reshape(shape)
        params[name] = np.ascontiguousarray(data, dtype=np.float32)
    if pos != len(raw):
        raise FormatError(f"{path}: {len(raw) - pos} trailing bytes")
    check_params(cfg, params)
    return cfg, params
