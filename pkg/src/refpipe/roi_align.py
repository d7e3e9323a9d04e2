"""Target-specific feature extraction: RoIAlign over continuous boxes.

Feature cell centers sit at half-integer coordinates, so a W'xH' map spans
[0, W'] x [0, H'] and bilinear interpolation of an affine field reproduces
it exactly inside the border-cell centers. Out-of-map sample points clamp
to the border (replicate padding), which keeps boxes at frame edges usable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_positive_int
from .feature_store import FrameFeatureSequence
from .geometry import Box, TrackedBox, TrackingList, clip_box

DEFAULT_GRID_SIZE = 7
DEFAULT_SAMPLES_PER_BIN = 2


@dataclass
class RoiFeature:
    """One region's pooled feature vector plus its provenance.

    When kept, `grid` holds the G x G x D aligned bin values; `vector` is
    always their mean.
    """

    source: TrackedBox
    vector: np.ndarray
    grid: Optional[np.ndarray] = None


def stack_vectors(rois: Sequence[RoiFeature]) -> np.ndarray:
    """Stack RoI vectors into an (n, D) array, preserving order."""
    if len(rois) == 0:
        raise ValueError("empty RoI feature set")
    return np.stack([r.vector for r in rois]).astype(np.float64)


def bilinear_sample(fmap: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample an (H, W, D) map at continuous points, replicate-padded.

    xs and ys broadcast against each other; output shape is
    broadcast(xs, ys).shape + (D,).
    """
    h, w, _ = fmap.shape
    xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=np.float64),
                                 np.asarray(ys, dtype=np.float64))
    u = xs - 0.5
    v = ys - 0.5
    x0 = np.floor(u).astype(np.int64)
    y0 = np.floor(v).astype(np.int64)
    fx = u - x0
    fy = v - y0
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    m = fmap.astype(np.float64)
    top = m[y0c, x0c] * (1.0 - fx)[..., None] + m[y0c, x1c] * fx[..., None]
    bot = m[y1c, x0c] * (1.0 - fx)[..., None] + m[y1c, x1c] * fx[..., None]
    return top * (1.0 - fy)[..., None] + bot * fy[..., None]


def _sample_lattice(box: Box, grid_size: int, samples_per_bin: int):
    # G x G equal bins, k x k half-offset interior samples per bin ==
    # a uniform (G*k) x (G*k) half-offset lattice over the whole box.
    n = grid_size * samples_per_bin
    xs = box.x1 + (np.arange(n) + 0.5) * (box.width / n)
    ys = box.y1 + (np.arange(n) + 0.5) * (box.height / n)
    return xs, ys


def roi_align(fmap: np.ndarray, box: Box, grid_size: int = DEFAULT_GRID_SIZE,
              samples_per_bin: int = DEFAULT_SAMPLES_PER_BIN,
              keep_grid: bool = False, t: int = 0) -> RoiFeature:
    """Pool one box from an (H', W', D) frame map into a single D-vector.

    The box is clipped to the map extent first (raising DegenerateBoxError
    if nothing remains), split into grid_size x grid_size equal bins, each
    sampled at samples_per_bin^2 regularly spaced interior points by
    bilinear interpolation; bin values are sample means and the vector is
    the mean over bins.
    """
    g = check_positive_int(grid_size, "grid_size")
    k = check_positive_int(samples_per_bin, "samples_per_bin")
    fmap = np.asarray(fmap, dtype=np.float32)
    if fmap.ndim != 3:
        raise ValueError(f"frame map must be (H', W', D), got shape {fmap.shape}")
    h, w, d = fmap.shape
    used = clip_box(box, float(w), float(h))
    xs, ys = _sample_lattice(used, g, k)
    samples = bilinear_sample(fmap, xs[None, :], ys[:, None])  # (n, n, D)
    grid = samples.reshape(g, k, g, k, d).mean(axis=(1, 3))
    vector = grid.mean(axis=(0, 1)).astype(np.float32)
    return RoiFeature(
        source=TrackedBox(t=t, box=used),
        vector=vector,
        grid=grid.astype(np.float32) if keep_grid else None,
    )


def roi_align_vectors(fmap: np.ndarray, boxes: np.ndarray,
                      grid_size: int = DEFAULT_GRID_SIZE,
                      samples_per_bin: int = DEFAULT_SAMPLES_PER_BIN) -> np.ndarray:
    """Vectorized pooling of many (x1, y1, x2, y2) rows from one frame map.

    Boxes are assumed pre-clipped and valid; returns an (n_boxes, D) array.
    Used by the tracker, which scores dozens of candidate boxes per frame.
    """
    g = check_positive_int(grid_size, "grid_size")
    k = check_positive_int(samples_per_bin, "samples_per_bin")
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    n = g * k
    frac = (np.arange(n) + 0.5) / n
    xs = boxes[:, 0:1] + frac[None, :] * (boxes[:, 2:3] - boxes[:, 0:1])  # (B, n)
    ys = boxes[:, 1:2] + frac[None, :] * (boxes[:, 3:4] - boxes[:, 1:2])
    samples = bilinear_sample(np.asarray(fmap, dtype=np.float32),
                              xs[:, None, :], ys[:, :, None])  # (B, n, n, D)
    return samples.mean(axis=(1, 2))


class RoiAlignExtractor(BaseEstimator):
    """Configured RoIAlign with helpers for whole tracking lists."""

    def __init__(self, grid_size: int = DEFAULT_GRID_SIZE,
                 samples_per_bin: int = DEFAULT_SAMPLES_PER_BIN,
                 keep_grid: bool = False):
        self.grid_size = grid_size
        self.samples_per_bin = samples_per_bin
        self.keep_grid = keep_grid

    def extract(self, fmap: np.ndarray, box: Box, t: int = 0) -> RoiFeature:
        return roi_align(fmap, box, self.grid_size, self.samples_per_bin,
                         keep_grid=self.keep_grid, t=t)

    def extract_track(self, seq: FrameFeatureSequence, track: TrackingList) -> list[RoiFeature]:
        """One RoiFeature per tracking-list entry, in frame order."""
        out = []
        for entry in track:
            if entry.t >= seq.t_count:
                raise IndexError(f"tracked frame {entry.t} outside sequence T={seq.t_count}")
            out.append(self.extract(seq.data[entry.t], entry.box, t=entry.t))
        return out
