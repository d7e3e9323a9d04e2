"""Turning heterogeneous source annotations into unified QA records.

Sources differ only in field shapes, so per-dataset adapters are
declarative mappings (builtin or loaded from JSON) rather than code. The
output record pairs a sampled question template with the clip caption, a
seed box, and a reconciled tracking list.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .geometry import Box, TrackedBox, TrackingList
from .prompts import TemplateLibrary
from .tracking import AnnotationSet, reconcile


@dataclass
class SourceAnnotation:
    """One video's raw annotation after adapter mapping."""

    video_id: str
    duration: float
    fps: float
    boxes: dict[int, Box] = field(default_factory=dict)
    caption: Optional[str] = None
    intervals: list[tuple[float, float, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        for start, end, _ in self.intervals:
            if not (0 <= start < end <= self.duration):
                raise ValueError(
                    f"interval [{start}, {end}) outside video duration {self.duration}")

    def annotations(self) -> AnnotationSet:
        return AnnotationSet(dict(self.boxes))


@dataclass
class QaPair:
    video_id: str
    clip: tuple[float, float]
    question: str
    answer: str
    seed_box: TrackedBox
    tracking_list: TrackingList

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "clip": [self.clip[0], self.clip[1]],
            "question": self.question,
            "answer": self.answer,
            "seed_box": self.seed_box.to_dict(),
            "tracking_list": [e.to_dict() for e in self.tracking_list],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QaPair":
        return cls(
            video_id=d["video_id"],
            clip=(d["clip"][0], d["clip"][1]),
            question=d["question"],
            answer=d["answer"],
            seed_box=TrackedBox.from_dict(d["seed_box"]),
            tracking_list=TrackingList(TrackedBox.from_dict(e) for e in d["tracking_list"]),
        )


def clip_crop(ann: SourceAnnotation, seg_len: float, count: int) -> list[tuple[float, float]]:
    """Up to `count` non-overlapping seg_len-second intervals, evenly spaced.

    Starts sit at k * (duration - seg_len) / (count - 1); the count shrinks
    to floor(duration / seg_len) when that many segments cannot fit.
    """
    if seg_len <= 0:
        raise ValueError(f"segment length must be positive, got {seg_len}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if ann.duration < seg_len:
        raise ValueError(
            f"video {ann.video_id!r} duration {ann.duration}s is shorter than {seg_len}s")
    n = min(count, int(ann.duration // seg_len))
    if n <= 1:
        return [(0.0, seg_len)]
    spacing = (ann.duration - seg_len) / (n - 1)
    return [(k * spacing, k * spacing + seg_len) for k in range(n)]


def mask_to_bbox(mask) -> Box:
    """Tight bounds of a binary grid: (min x, min y, max x + 1, max y + 1)."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"mask must be a 2-D grid, got shape {m.shape}")
    ys, xs = np.nonzero(m)
    if len(xs) == 0:
        raise ValueError("mask has no set cells")
    return Box(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def compose_caption(category: str, adverb: str, action: str) -> str:
    """Join category/adverb/action triples: '<category> is <adverb> <action>.'"""
    category = category.strip()
    action = action.strip()
    adverb = adverb.strip()
    if not category or not action:
        raise ValueError("category and action must be non-empty")
    middle = f"{adverb} {action}" if adverb else action
    return f"{category} is {middle}."


TrackSource = Union[
    TrackingList,
    Callable[..., Union[TrackingList, tuple[TrackingList, TrackingList]]],
    None,
]


def _clip_frames(ann: SourceAnnotation, clip: tuple[float, float]) -> list[int]:
    start, end = clip
    return sorted(t for t in ann.boxes if start <= t / ann.fps < end)


def build_qa(ann: SourceAnnotation, clip: tuple[float, float], seed,
             lib: TemplateLibrary, track_source: TrackSource = None,
             tau: float = 0.5, answer: Optional[str] = None) -> QaPair:
    """Build one QA record for a clip of a video.

    The seed frame is a seeded-uniform draw among the clip's annotated
    frames; the tracking list comes from track_source (an ingested list,
    or a callable producing one or two lists from the annotation, clip,
    and seed box; None falls back to the annotations themselves) and is
    reconciled against the annotations at threshold tau.
    """
    frames = _clip_frames(ann, clip)
    if not frames:
        raise ValueError(f"clip [{clip[0]}, {clip[1]}) of {ann.video_id!r} has no annotated frame")
    rng = random.Random(f"{seed}:{ann.video_id}:{clip[0]}:{clip[1]}")
    seed_t = rng.choice(frames)
    seed_box = TrackedBox(seed_t, ann.boxes[seed_t])

    clip_gt = AnnotationSet({t: ann.boxes[t] for t in frames})
    if track_source is None:
        raw = TrackingList(TrackedBox(t, ann.boxes[t]) for t in frames)
    elif isinstance(track_source, TrackingList):
        raw = track_source
    else:
        raw = track_source(ann, clip, seed_box)
    if isinstance(raw, tuple):
        list_a, list_b = raw
    else:
        list_a, list_b = raw, TrackingList()
    start, end = clip
    list_a = TrackingList(e for e in list_a if start <= e.t / ann.fps < end)
    list_b = TrackingList(e for e in list_b if start <= e.t / ann.fps < end)
    tracking = reconcile(list_a, list_b, clip_gt, tau)

    question = f"{rng.choice(list(lib.refer_instructions))} {rng.choice(list(lib.track_instructions))}"
    if answer is None:
        answer = ann.caption or ""
    return QaPair(
        video_id=ann.video_id,
        clip=clip,
        question=question,
        answer=answer,
        seed_box=seed_box,
        tracking_list=tracking,
    )


def export_dataset(pairs: Sequence[QaPair], path) -> None:
    """JSONL, one record per line, stable field order."""
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps(p.to_dict()) + "\n")


def load_dataset(path) -> list[QaPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                pairs.append(QaPair.from_dict(json.loads(line)))
    return pairs


# --------------------------------------------------------------- adapters

# Builtin field mappings; custom ones load from JSON with the same keys.
#   video_id/duration/fps/caption: source field names
#   boxes: field holding either {frame: [x1,y1,x2,y2]} or [{"t":..,"box":[..]}]
#   box_format: "xyxy" or "xywh"
#   masks: field holding {frame: 2-D 0/1 grid}, converted via mask_to_bbox
#   caption_parts: [category, adverb, action] fields composed into a caption
#   intervals: field holding [[start, end, caption], ...]
#   clip: "whole" | "intervals" | {"seg_len": sec, "count": n}
BUILTIN_ADAPTERS: dict[str, dict] = {
    "hcstvg": {"video_id": "vid", "duration": "duration", "fps": "fps",
               "boxes": "boxes", "box_format": "xyxy", "caption": "caption",
               "clip": "whole"},
    "vidsentence": {"video_id": "vid", "duration": "duration", "fps": "fps",
                    "boxes": "boxes", "box_format": "xyxy", "caption": "caption",
                    "clip": "whole"},
    "a2d": {"video_id": "video", "duration": "duration", "fps": "fps",
            "boxes": "boxes", "box_format": "xywh", "caption": "sentence",
            "clip": "whole"},
    "mevis": {"video_id": "video", "duration": "duration", "fps": "fps",
              "masks": "masks", "caption": "caption", "clip": "whole"},
    "lasot": {"video_id": "video", "duration": "duration", "fps": "fps",
              "boxes": "boxes", "box_format": "xywh", "caption": "caption",
              "clip": {"seg_len": 10.0, "count": 3}},
    "got10k": {"video_id": "video", "duration": "duration", "fps": "fps",
               "boxes": "boxes", "box_format": "xywh",
               "caption_parts": ["category", "adverb", "action"], "clip": "whole"},
    "mgit": {"video_id": "video", "duration": "duration", "fps": "fps",
             "boxes": "boxes", "box_format": "xyxy", "intervals": "intervals",
             "clip": "intervals"},
}


def _parse_boxes(raw, box_format: str) -> dict[int, Box]:
    items = raw.items() if isinstance(raw, dict) else ((e["t"], e["box"]) for e in raw)
    out = {}
    for t, vals in items:
        x1, y1, a, b = (float(v) for v in vals)
        if box_format == "xywh":
            out[int(t)] = Box(x1, y1, x1 + a, y1 + b)
        else:
            out[int(t)] = Box(x1, y1, a, b)
    return out


def apply_adapter(raw: dict, adapter: dict) -> SourceAnnotation:
    """Map one raw source record into a SourceAnnotation."""
    boxes: dict[int, Box] = {}
    if "boxes" in adapter:
        boxes = _parse_boxes(raw[adapter["boxes"]], adapter.get("box_format", "xyxy"))
    elif "masks" in adapter:
        boxes = {int(t): mask_to_bbox(m) for t, m in raw[adapter["masks"]].items()}
    caption = None
    if "caption" in adapter:
        caption = raw.get(adapter["caption"])
    elif "caption_parts" in adapter:
        cat_f, adv_f, act_f = adapter["caption_parts"]
        caption = compose_caption(raw[cat_f], raw.get(adv_f, ""), raw[act_f])
    intervals = []
    if "intervals" in adapter:
        intervals = [(float(s), float(e), str(c)) for s, e, c in raw[adapter["intervals"]]]
    return SourceAnnotation(
        video_id=str(raw[adapter["video_id"]]),
        duration=float(raw[adapter["duration"]]),
        fps=float(raw[adapter["fps"]]),
        boxes=boxes,
        caption=caption,
        intervals=intervals,
    )


def get_adapter(name_or_path: str) -> dict:
    if name_or_path in BUILTIN_ADAPTERS:
        return BUILTIN_ADAPTERS[name_or_path]
    with open(name_or_path, "r", encoding="utf-8") as f:
        return json.load(f)


def curate_annotation(ann: SourceAnnotation, adapter: dict, seed,
                      lib: TemplateLibrary, track_source: TrackSource = None,
                      tau: float = 0.5) -> list[QaPair]:
    """All QA pairs for one video, following the adapter's clip policy."""
    policy = adapter.get("clip", "whole")
    pairs = []
    if policy == "intervals":
        for start, end, caption in ann.intervals:
            pairs.append(build_qa(ann, (start, end), seed, lib, track_source, tau,
                                  answer=caption))
    elif policy == "whole":
        pairs.append(build_qa(ann, (0.0, ann.duration), seed, lib, track_source, tau))
    else:
        for clip in clip_crop(ann, float(policy["seg_len"]), int(policy["count"])):
            if _clip_frames(ann, clip):
                pairs.append(build_qa(ann, clip, seed, lib, track_source, tau))
    return pairs
