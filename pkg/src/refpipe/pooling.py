"""Spatial and temporal feature slices of a frame feature sequence.

Both pools accumulate in float64 and store float32, so results do not
depend on summation chunking at the scales handled here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feature_store import FrameFeatureSequence


@dataclass
class SpatialFeatures:
    """Time-averaged feature map, shape (H', W', D), one token per grid cell."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError(f"spatial features must be rank 3, got {self.data.ndim}")
        if not np.isfinite(self.data).all():
            raise ValueError("spatial features contain non-finite values")

    @property
    def grid_h(self) -> int:
        return self.data.shape[0]

    @property
    def grid_w(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    @property
    def token_count(self) -> int:
        return self.grid_h * self.grid_w


@dataclass
class TemporalFeatures:
    """Plane-averaged per-frame features, shape (T, D), one token per frame."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"temporal features must be rank 2, got {self.data.ndim}")
        if not np.isfinite(self.data).all():
            raise ValueError("temporal features contain non-finite values")

    @property
    def t_count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def spatial_pool(seq: FrameFeatureSequence) -> SpatialFeatures:
    """Average over the T axis: out[y, x, d] = mean_t seq[t, y, x, d]."""
    if seq.t_count < 1:
        raise ValueError("cannot pool an empty sequence")
    pooled = seq.data.astype(np.float64).mean(axis=0)
    return SpatialFeatures(pooled.astype(np.float32))


def temporal_pool(seq: FrameFeatureSequence) -> TemporalFeatures:
    """Average over the spatial plane: out[t, d] = mean_{y,x} seq[t, y, x, d]."""
    if seq.grid_h * seq.grid_w < 1:
        raise ValueError("cannot pool an empty spatial plane")
    pooled = seq.data.astype(np.float64).mean(axis=(1, 2))
    return TemporalFeatures(pooled.astype(np.float32))
