"""ARTF binary tensor interchange: per-frame feature maps and projection weights.

File layout (little-endian throughout):

    magic   4 bytes  b"ARTF"
    version u32      1
    rank    u8
    dims    rank x u32
    dtype   u8       0 = 32-bit float (only supported code)
    payload dims-product x f32, row-major

Rank-4 files hold frame feature sequences (t, y, x, d); rank 2 holds weight
matrices, rank 1 bias vectors, rank 3 single frame maps or pooled spatial
features.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

MAGIC = b"ARTF"
VERSION = 1
DTYPE_F32 = 0
_MAX_RANK = 8

# Default geometry: 224-pixel input with a stride-14 encoder gives a 16x16
# token grid at 1024 channels; 100 frames keeps the combined video feature
# length at 356 tokens (256 spatial + 100 temporal).
DEFAULT_RESOLUTION = 224
DEFAULT_STRIDE = 14
DEFAULT_GRID = DEFAULT_RESOLUTION // DEFAULT_STRIDE
DEFAULT_DIM = 1024
DEFAULT_T = 100


class ArtfError(Exception):
    """Base class for ARTF file format errors."""


class BadMagicError(ArtfError):
    pass


class BadVersionError(ArtfError):
    pass


class UnsupportedDtypeError(ArtfError):
    pass


class BadRankError(ArtfError):
    pass


class PayloadSizeError(ArtfError):
    """Declared dims do not match the number of payload bytes."""


class NonFiniteError(ArtfError):
    """Payload contains NaN or infinity; downstream math assumes finite data."""


@dataclass
class FrameFeatureSequence:
    """Dense per-frame feature maps, shape (T, H', W', D), indexed [t, y, x, d]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 4:
            raise ValueError(f"feature sequence must be rank 4, got rank {self.data.ndim}")
        if not np.isfinite(self.data).all():
            raise NonFiniteError("feature sequence contains non-finite values")

    @property
    def t_count(self) -> int:
        return self.data.shape[0]

    @property
    def grid_h(self) -> int:
        return self.data.shape[1]

    @property
    def grid_w(self) -> int:
        return self.data.shape[2]

    @property
    def dim(self) -> int:
        return self.data.shape[3]


@dataclass
class WeightMatrix:
    """Affine map parameters, applied as y = x @ weights + bias.

    weights has shape (rows, cols) = (input dim, output dim); bias, when
    present, has length cols.
    """

    weights: np.ndarray
    bias: Optional[np.ndarray] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float32)
        if self.weights.ndim != 2:
            raise ValueError(f"weight matrix must be rank 2, got rank {self.weights.ndim}")
        if not np.isfinite(self.weights).all():
            raise NonFiniteError("weight matrix contains non-finite values")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float32)
            if self.bias.shape != (self.cols,):
                raise ValueError(
                    f"bias length {self.bias.shape} does not match cols {self.cols}"
                )
            if not np.isfinite(self.bias).all():
                raise NonFiniteError("bias contains non-finite values")

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


def write_tensor(tensor, path) -> None:
    """Write an array (rank 1..8) of 32-bit floats in the ARTF layout.

    Accepts FrameFeatureSequence, WeightMatrix (weights only) or anything
    numpy can coerce to a float array.
    """
    if isinstance(tensor, FrameFeatureSequence):
        arr = tensor.data
    elif isinstance(tensor, WeightMatrix):
        arr = tensor.weights
    else:
        arr = np.asarray(tensor, dtype=np.float32)
    if arr.ndim < 1 or arr.ndim > _MAX_RANK:
        raise BadRankError(f"rank must be in 1..{_MAX_RANK}, got {arr.ndim}")
    if not np.isfinite(arr).all():
        raise NonFiniteError("refusing to write non-finite values")
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            f.write(struct.pack("<I", d))
        f.write(struct.pack("<B", DTYPE_F32))
        f.write(arr.astype("<f4").tobytes())


def read_array(path) -> np.ndarray:
    """Read an ARTF file into a float32 array; validates header and payload."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    off = 4
    if len(raw) < off + 4:
        raise PayloadSizeError("truncated header: missing version")
    (version,) = struct.unpack_from("<I", raw, off)
    off += 4
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}")
    if len(raw) < off + 1:
        raise PayloadSizeError("truncated header: missing rank")
    rank = raw[off]
    off += 1
    if rank < 1 or rank > _MAX_RANK:
        raise BadRankError(f"rank must be in 1..{_MAX_RANK}, got {rank}")
    if len(raw) < off + 4 * rank + 1:
        raise PayloadSizeError("truncated header: missing dims or dtype")
    dims = struct.unpack_from(f"<{rank}I", raw, off)
    off += 4 * rank
    dtype_code = raw[off]
    off += 1
    if dtype_code != DTYPE_F32:
        raise UnsupportedDtypeError(f"unsupported dtype code {dtype_code}")
    count = 1
    for d in dims:
        count *= int(d)
    expected = count * 4
    actual = len(raw) - off
    if actual != expected:
        raise PayloadSizeError(
            f"dims {tuple(dims)} require {expected} payload bytes, file has {actual}"
        )
    arr = np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(dims)
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite values in {path}")
    return arr.copy()


def read_tensor(path):
    """Read an ARTF file, wrapping by rank.

    Rank 4 -> FrameFeatureSequence, rank 2 -> WeightMatrix (no bias),
    other ranks -> plain float32 array.
    """
    arr = read_array(path)
    if arr.ndim == 4:
        return FrameFeatureSequence(arr)
    if arr.ndim == 2:
        return WeightMatrix(arr)
    return arr


def read_feature_sequence(path) -> FrameFeatureSequence:
    arr = read_array(path)
    if arr.ndim != 4:
        raise BadRankError(f"expected rank-4 feature sequence, got rank {arr.ndim}")
    return FrameFeatureSequence(arr)


def read_weight_matrix(path, bias_path=None) -> WeightMatrix:
    arr = read_array(path)
    if arr.ndim != 2:
        raise BadRankError(f"expected rank-2 weight matrix, got rank {arr.ndim}")
    bias = None
    if bias_path is not None:
        bias = read_array(bias_path)
        if bias.ndim != 1:
            raise BadRankError(f"expected rank-1 bias, got rank {bias.ndim}")
    return WeightMatrix(arr, bias)


def slice_frame(seq: FrameFeatureSequence, t: int) -> np.ndarray:
    """Copy of frame t as an (H', W', D) map."""
    if t < 0 or t >= seq.t_count:
        raise IndexError(f"frame index {t} out of range for T={seq.t_count}")
    return seq.data[t].copy()
