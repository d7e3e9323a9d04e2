"""Tracking-list production and sanitation.

The baseline tracker is a fixed-size template matcher: it slides the seed
box over a step-grid of nearby positions frame by frame and keeps the
position whose pooled feature best matches the seed's, dropping frames
whose best similarity falls below a floor. It stands in for any external
tracker; externally produced lists enter through the same JSONL shape and
run through the same reconciliation filter.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .feature_store import FrameFeatureSequence
from .geometry import Box, InvalidBoxError, TrackedBox, TrackingList, clip_box, iou
from .roi_align import DEFAULT_GRID_SIZE, DEFAULT_SAMPLES_PER_BIN, roi_align_vectors


@dataclass
class AnnotationSet:
    """Sparse ground-truth boxes keyed by frame index."""

    boxes: dict[int, Box] = field(default_factory=dict)

    def __post_init__(self):
        for t in self.boxes:
            if t < 0 or int(t) != t:
                raise InvalidBoxError(f"annotation frame index must be >= 0, got {t}")

    def __contains__(self, t: int) -> bool:
        return t in self.boxes

    def __len__(self) -> int:
        return len(self.boxes)

    def frames(self) -> list[int]:
        return sorted(self.boxes)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"t": t, "box": self.boxes[t].to_list()}) + "\n" for t in self.frames()
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "AnnotationSet":
        boxes = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            boxes[int(d["t"])] = Box.from_list(d["box"])
        return cls(boxes)

    @classmethod
    def load(cls, path) -> "AnnotationSet":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_jsonl(f.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine of b against a single vector a; zero-norm rows score 0."""
    na = float(np.linalg.norm(a))
    nb = np.linalg.norm(b, axis=-1)
    denom = na * nb
    out = np.zeros(b.shape[:-1], dtype=np.float64)
    ok = denom > 0.0
    out[ok] = (b[ok] @ a) / denom[ok]
    return out


class CorrelationTracker(BaseEstimator):
    """Fixed-box-size tracker matching pooled features against the seed.

    search_radius and step are in feature-grid cells; candidates per frame
    are all (dx, dy) offsets of the previous location on the step-grid
    within the radius. min_similarity in [-1, 1] is the drop-out floor:
    frames scoring below it produce no entry.
    """

    def __init__(self, search_radius: float = 2.0, min_similarity: float = 0.3,
                 step: float = 1.0, grid_size: int = DEFAULT_GRID_SIZE,
                 samples_per_bin: int = DEFAULT_SAMPLES_PER_BIN):
        self.search_radius = search_radius
        self.min_similarity = min_similarity
        self.step = step
        self.grid_size = grid_size
        self.samples_per_bin = samples_per_bin

    def _check_params(self):
        if self.search_radius < 1:
            raise ValueError(f"search_radius must be >= 1, got {self.search_radius}")
        if self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not -1.0 <= self.min_similarity <= 1.0:
            raise ValueError(f"min_similarity must be in [-1, 1], got {self.min_similarity}")

    def _offsets(self) -> np.ndarray:
        r, s = float(self.search_radius), float(self.step)
        one_axis = np.arange(-r, r + 1e-9, s)
        dy, dx = np.meshgrid(one_axis, one_axis, indexing="ij")
        return np.stack([dx.ravel(), dy.ravel()], axis=1)  # (n_cand, 2)

    def _best_candidate(self, fmap, origin, size, extent):
        """Returns (similarity, (x1, y1)) of the best-matching offset box."""
        w, h = size
        max_x, max_y = extent[0] - w, extent[1] - h
        cand = self._offsets() + np.asarray(origin)
        cand[:, 0] = np.clip(cand[:, 0], 0.0, max_x)
        cand[:, 1] = np.clip(cand[:, 1], 0.0, max_y)
        boxes = np.concatenate([cand, cand + [w, h]], axis=1)
        vecs = roi_align_vectors(fmap, boxes, self.grid_size, self.samples_per_bin)
        sims = _cosine(self._seed_vector, vecs)
        best = int(np.argmax(sims))
        return float(sims[best]), (float(cand[best, 0]), float(cand[best, 1]))

    def track(self, seq: FrameFeatureSequence, seed: TrackedBox) -> TrackingList:
        """Track the seed box forward and backward through the sequence.

        The seed frame's entry is always the seed box itself; all other
        entries share its size, and frames whose best similarity is below
        min_similarity are omitted.
        """
        self._check_params()
        if seed.t >= seq.t_count:
            raise IndexError(f"seed frame {seed.t} outside sequence T={seq.t_count}")
        extent = (float(seq.grid_w), float(seq.grid_h))
        seed_box = clip_box(seed.box, *extent)
        size = (seed_box.width, seed_box.height)
        self._seed_vector = roi_align_vectors(
            seq.data[seed.t], np.array([seed_box.to_list()]),
            self.grid_size, self.samples_per_bin)[0]

        found: dict[int, Box] = {seed.t: seed_box}
        for direction in (1, -1):
            origin = (seed_box.x1, seed_box.y1)
            t = seed.t + direction
            while 0 <= t < seq.t_count:
                sim, pos = self._best_candidate(seq.data[t], origin, size, extent)
                if sim >= self.min_similarity:
                    found[t] = Box(pos[0], pos[1], pos[0] + size[0], pos[1] + size[1])
                    origin = pos
                t += direction
        return TrackingList(TrackedBox(t, found[t]) for t in sorted(found))


def reconcile(list_a: TrackingList, list_b: TrackingList, gt: AnnotationSet,
              tau: float) -> TrackingList:
    """Merge two tracking lists, filtering annotated frames by IoU >= tau.

    Where a frame carries a ground-truth box, a proposal survives only if
    its IoU with the annotation reaches tau, and when both lists propose,
    the higher-IoU box wins (ties and unannotated frames prefer list_a).
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    a_boxes = list_a.by_frame()
    b_boxes = list_b.by_frame()
    merged = []
    for t in sorted(set(a_boxes) | set(b_boxes)):
        if t in gt:
            candidates = []
            for order, source in enumerate((a_boxes, b_boxes)):
                if t in source:
                    score = iou(source[t], gt.boxes[t])
                    if score >= tau:
                        candidates.append((-score, order, source[t]))
            if candidates:
                candidates.sort(key=lambda c: (c[0], c[1]))
                merged.append(TrackedBox(t, candidates[0][2]))
        else:
            box = a_boxes.get(t, b_boxes.get(t))
            merged.append(TrackedBox(t, box))
    return TrackingList(merged)


def sample_track(track: TrackingList, n: int) -> TrackingList:
    """Uniform temporal subsample to n entries (all entries when len <= n).

    Indices are round(i * (len-1) / (n-1)), half away from zero; first and
    last entries are always kept for n >= 2.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(track) == 0:
        raise ValueError("cannot sample an empty tracking list")
    if len(track) <= n:
        return TrackingList(track.entries)
    if n == 1:
        return TrackingList([track[0]])
    span = len(track) - 1
    indices = [int(np.floor(i * span / (n - 1) + 0.5)) for i in range(n)]
    return TrackingList(track[i] for i in indices)


def track_with_dual_references(seq: FrameFeatureSequence, gt: AnnotationSet,
                               tracker: CorrelationTracker | None = None,
                               tau: float = 0.5) -> TrackingList:
    """Track from the first and middle annotated frames, then reconcile.

    Seeding twice guards against drift away from the target over long
    gaps; the reconciliation filter then drops whichever proposals
    disagree with the sparse annotations.
    """
    frames = gt.frames()
    if not frames:
        raise ValueError("annotation set is empty")
    tracker = tracker if tracker is not None else CorrelationTracker()
    first = frames[0]
    middle = frames[len(frames) // 2]
    list_a = tracker.track(seq, TrackedBox(first, gt.boxes[first]))
    if middle == first:
        return reconcile(list_a, TrackingList(), gt, tau)
    list_b = tracker.track(seq, TrackedBox(middle, gt.boxes[middle]))
    return reconcile(list_a, list_b, gt, tau)
