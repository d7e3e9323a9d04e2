"""Bounding boxes in continuous feature-grid coordinates, plus IoU and transforms."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator


class InvalidBoxError(ValueError):
    """Box violates x1 < x2, y1 < y2 or contains non-finite coordinates."""


class DegenerateBoxError(InvalidBoxError):
    """Box collapsed to zero area, e.g. after clipping a fully-outside box."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle (x1, y1, x2, y2) with strictly positive area.

    Coordinates are continuous (half-open in both axes); no pixel +1
    conventions are applied anywhere.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise InvalidBoxError(f"non-finite coordinate in {self!r}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidBoxError(
                f"box must satisfy x1 < x2 and y1 < y2, got "
                f"({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def to_list(self) -> list[float]:
        """Serialized form: four-element array [x1, y1, x2, y2]."""
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_list(cls, values: Iterable[float]) -> "Box":
        vals = list(values)
        if len(vals) != 4:
            raise InvalidBoxError(f"box array must have 4 elements, got {len(vals)}")
        return cls(*(float(v) for v in vals))


@dataclass(frozen=True)
class TrackedBox:
    """A box tied to a frame index t >= 0."""

    t: int
    box: Box

    def __post_init__(self):
        if self.t < 0 or int(self.t) != self.t:
            raise InvalidBoxError(f"frame index must be a non-negative integer, got {self.t}")

    def to_dict(self) -> dict:
        return {"t": int(self.t), "box": self.box.to_list()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrackedBox":
        return cls(t=int(d["t"]), box=Box.from_list(d["box"]))


class TrackingList:
    """Ordered per-frame boxes for one target; frame indices strictly increasing.

    May be shorter than the owning sequence: frames where the target was
    lost (occlusion, low similarity) are simply absent.
    """

    def __init__(self, entries: Iterable[TrackedBox] = ()):
        self.entries: list[TrackedBox] = list(entries)
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.t <= prev.t:
                raise InvalidBoxError(
                    f"tracking list frames must be strictly increasing, "
                    f"got t={prev.t} before t={cur.t}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TrackedBox]:
        return iter(self.entries)

    def __getitem__(self, i) -> TrackedBox:
        return self.entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, TrackingList) and self.entries == other.entries

    def frames(self) -> list[int]:
        return [e.t for e in self.entries]

    def by_frame(self) -> dict[int, Box]:
        return {e.t: e.box for e in self.entries}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text: str) -> "TrackingList":
        entries = [TrackedBox.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
        return cls(entries)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "TrackingList":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_jsonl(f.read())


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes, in [0, 1].

    Symmetric; exactly 1.0 for identical boxes and exactly 0.0 when the
    intersection has zero area (no epsilon smoothing).
    """
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def clip_box(b: Box, width: float, height: float) -> Box:
    """Clamp a box to [0, width] x [0, height].

    Raises DegenerateBoxError when the clamped box has zero area, i.e. the
    input lies fully outside the target extent.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"clip extent must be positive, got {width}x{height}")
    x1 = min(max(b.x1, 0.0), width)
    y1 = min(max(b.y1, 0.0), height)
    x2 = min(max(b.x2, 0.0), width)
    y2 = min(max(b.y2, 0.0), height)
    if x1 >= x2 or y1 >= y2:
        raise DegenerateBoxError(
            f"box {b.to_list()} degenerates to zero area when clipped to {width}x{height}"
        )
    return Box(x1, y1, x2, y2)


def rescale_box(b: Box, sx: float, sy: float) -> Box:
    """Multiply each coordinate by its axis scale (e.g. pixel -> feature grid)."""
    if sx <= 0 or sy <= 0:
        raise ValueError(f"scales must be positive, got sx={sx}, sy={sy}")
    return Box(b.x1 * sx, b.y1 * sy, b.x2 * sx, b.y2 * sy)
