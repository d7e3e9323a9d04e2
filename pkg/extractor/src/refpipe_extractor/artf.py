"""Standalone ARTF tensor writer.

The layout is the pipeline's interchange contract and is reimplemented
here so this package needs none of the pipeline's code:

    magic   4 bytes  b"ARTF"
    version u32      1
    rank    u8
    dims    rank x u32
    dtype   u8       0 = float32
    payload little-endian row-major float32
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"ARTF"
VERSION = 1
DTYPE_F32 = 0


def write_artf(array, path) -> None:
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > 8:
        raise ValueError(f"rank must be in 1..8, got {arr.ndim}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite values")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            f.write(struct.pack("<I", d))
        f.write(struct.pack("<B", DTYPE_F32))
        f.write(arr.tobytes())


def read_artf(path) -> np.ndarray:
    """Minimal reader used for round-trip self-checks."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    rank = raw[8]
    dims = struct.unpack_from(f"<{rank}I", raw, 9)
    off = 9 + 4 * rank
    if raw[off] != DTYPE_F32:
        raise ValueError(f"unsupported dtype code {raw[off]}")
    off += 1
    count = int(np.prod(dims))
    if len(raw) - off != 4 * count:
        raise ValueError("payload size does not match dims")
    return np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(dims).copy()
