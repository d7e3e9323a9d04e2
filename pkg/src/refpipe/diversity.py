"""Informativeness and diversity measurements for RoI feature sets.

Entropy quantizes each dimension into equal-width bins over its observed
range and averages the per-dimension Shannon entropy; diversity measures
average (1 - cosine) over consecutive or all pairs, so both are invariant
to positively rescaling every vector.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ._validation import check_vectors

DEFAULT_BINS = 32


class DegenerateVectorError(ValueError):
    """Cosine-based diversity is undefined for a zero vector."""


class ZeroEntropyError(ValueError):
    """Relative entropy gain is undefined against a zero-entropy base."""


@dataclass
class DiversityReport:
    entropy_bits: float
    consecutive_diversity: float
    pairwise_diversity: float
    n_rois: int

    def to_dict(self) -> dict:
        return asdict(self)


def feature_entropy(vectors, bins: int = DEFAULT_BINS) -> float:
    """Mean per-dimension Shannon entropy in bits.

    Each dimension is quantized into `bins` equal-width bins spanning its
    own observed [min, max]; a constant dimension contributes 0 bits.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    x = check_vectors(vectors, "vectors")
    n, d = x.shape
    total = 0.0
    for j in range(d):
        lo = x[:, j].min()
        hi = x[:, j].max()
        if hi == lo:
            continue
        idx = np.clip(((x[:, j] - lo) / (hi - lo) * bins).astype(np.int64), 0, bins - 1)
        p = np.bincount(idx, minlength=bins) / n
        p = p[p > 0]
        total += float(-(p * np.log2(p)).sum())
    return total / d


def inter_frame_diversity(vectors, metric: str = "cosine") -> tuple[float, float]:
    """(consecutive, pairwise) mean distance of an ordered vector list.

    consecutive averages over adjacent pairs, pairwise over all unordered
    pairs; fewer than two vectors give (0, 0). metric "cosine" uses
    1 - cosine similarity (range [0, 2]); "l2" uses Euclidean distance.
    """
    if metric not in ("cosine", "l2"):
        raise ValueError(f"unknown metric {metric!r}")
    x = check_vectors(vectors, "vectors")
    n = x.shape[0]
    if n < 2:
        return (0.0, 0.0)
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        if (norms == 0.0).any():
            raise DegenerateVectorError("zero vector has no cosine direction")
        unit = x / norms[:, None]
        dist = np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    else:
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))
    consecutive = float(np.mean([dist[i, i + 1] for i in range(n - 1)]))
    iu = np.triu_indices(n, k=1)
    pairwise = float(dist[iu].mean())
    return (consecutive, pairwise)


def entropy_gain(base, augmented, bins: int = DEFAULT_BINS) -> float:
    """Percent change in feature entropy from base to augmented set."""
    h_base = feature_entropy(base, bins)
    h_aug = feature_entropy(augmented, bins)
    if h_base == 0.0:
        raise ZeroEntropyError("base set has zero entropy; relative gain undefined")
    return 100.0 * (h_aug - h_base) / h_base


def analyze(vectors, bins: int = DEFAULT_BINS, metric: str = "cosine") -> DiversityReport:
    """Bundle entropy and both diversity measures into one report."""
    x = check_vectors(vectors, "vectors")
    consecutive, pairwise = inter_frame_diversity(x, metric)
    return DiversityReport(
        entropy_bits=feature_entropy(x, bins),
        consecutive_diversity=consecutive,
        pairwise_diversity=pairwise,
        n_rois=x.shape[0],
    )
