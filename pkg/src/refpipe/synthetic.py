"""Synthetic feature sequences and RoI sets with known ground truth.

Used by the test suite for benchmarks with analytic answers, and handy
for exercising the CLI without real encoder output.
"""
from __future__ import annotations

import numpy as np

from .feature_store import FrameFeatureSequence
from .geometry import Box, TrackedBox, TrackingList


def moving_square(t_count: int = 50, grid_w: int = 60, grid_h: int = 8,
                  dim: int = 3, start: tuple[float, float] = (1.0, 1.0),
                  velocity: tuple[float, float] = (1.0, 0.0), size: float = 2.0,
                  noise: float = 0.0, seed: int = 0):
    """A textured square translating over a zero background.

    Returns (sequence, ground_truth) where ground_truth holds the square's
    box in every frame. The square carries a fixed patch of per-cell
    random feature vectors (so misaligned boxes pool a different feature
    direction than aligned ones, not just a rescaled copy); cells are
    painted when their centers fall inside the box, so integer starts and
    velocities translate the patch rigidly.
    """
    rng = np.random.default_rng(seed)
    patch_cells = int(np.ceil(size)) + 1
    patch = rng.uniform(0.5, 1.5, size=(patch_cells, patch_cells, dim)).astype(np.float32)
    data = np.zeros((t_count, grid_h, grid_w, dim), dtype=np.float32)
    if noise > 0:
        data += rng.normal(0.0, noise, size=data.shape).astype(np.float32)
    cy, cx = np.meshgrid(np.arange(grid_h) + 0.5, np.arange(grid_w) + 0.5,
                         indexing="ij")
    entries = []
    for t in range(t_count):
        x1 = start[0] + velocity[0] * t
        y1 = start[1] + velocity[1] * t
        box = Box(x1, y1, x1 + size, y1 + size)
        inside = (cx > box.x1) & (cx < box.x2) & (cy > box.y1) & (cy < box.y2)
        ys, xs = np.nonzero(inside)
        if len(ys):
            data[t, ys, xs] = patch[ys - ys.min(), xs - xs.min()]
        entries.append(TrackedBox(t, box))
    return FrameFeatureSequence(data), TrackingList(entries)


def static_square(t_count: int = 20, grid_w: int = 16, grid_h: int = 16,
                  dim: int = 3, origin: tuple[float, float] = (4.0, 4.0),
                  size: float = 3.0):
    """Motionless variant of moving_square."""
    return moving_square(t_count=t_count, grid_w=grid_w, grid_h=grid_h, dim=dim,
                         start=origin, velocity=(0.0, 0.0), size=size)


def two_regime_vectors(n_total: int = 12, regime_b: tuple[int, int] = (5, 6),
                       dim: int = 8, separation: float = 4.0,
                       noise: float = 0.05, seed: int = 0) -> np.ndarray:
    """Ordered RoI vectors where frames regime_b[0]..regime_b[1]-1 sit near a
    second, well-separated center; everything else sits near the first."""
    rng = np.random.default_rng(seed)
    u = rng.normal(0.0, 1.0, size=dim)
    u /= np.linalg.norm(u)
    v = rng.normal(0.0, 1.0, size=dim)
    v -= (v @ u) * u
    v /= np.linalg.norm(v)
    out = np.empty((n_total, dim))
    for i in range(n_total):
        center = v * separation if regime_b[0] <= i < regime_b[1] else u * separation
        out[i] = center + rng.normal(0.0, noise, size=dim)
    return out


def regime_switch_sets(n_base: int = 4, n_tracked: int = 8, dim: int = 8,
                       separation: float = 2.0, seed: int = 0):
    """(base, augmented) vector sets for before/after-tracking comparisons.

    The base set covers only the first regime (as sparse annotations
    would); the augmented set appends tracked vectors that span the
    regime switch.
    """
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 1.0, size=(n_base, dim))
    first = rng.uniform(0.0, 1.0, size=(n_tracked // 2, dim))
    second = rng.uniform(0.0, 1.0, size=(n_tracked - n_tracked // 2, dim)) + separation
    augmented = np.concatenate([base, first, second], axis=0)
    return base, augmented
