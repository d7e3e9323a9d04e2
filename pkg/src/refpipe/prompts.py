"""Interleaved text/placeholder sequences for the three conversation templates.

A prompt is a list of segments: literal text, or a slot standing for one
embedding vector (a spatial grid cell, a frame token, the queried seed
region, or one tracked region). Assembly emits abstract slots only;
binding slots to projected vectors is a separate composition step, which
keeps tokenizers and any language model out of this layer.
"""
from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .pooling import SpatialFeatures, TemporalFeatures
from .roi_align import RoiFeature

SLOT_KINDS = ("spatial", "temporal", "seed_region", "track_region")

REGION_TOKEN = "<region>"
# one placeholder run: <region> tokens joined by spaces, commas, or ellipses
_RUN_RE = re.compile(r"<region>(?:[\s,.]*<region>)*")
_SLOT_RE = re.compile(r"<slot:([a-z_]+):(\d+)>")

DEFAULT_STAGE1_INSTRUCTION = (
    "Write a terse but informative summary of the following video clip."
)
DEFAULT_STAGE2_INSTRUCTIONS = [
    "What is the person doing in the video?",
    "Where is the person in the image?",
]
DEFAULT_REFER_INSTRUCTIONS = [
    "What is the <region> doing during this video?",
    "What is the target <region> doing in this video?",
]
DEFAULT_TRACK_INSTRUCTIONS = [
    "This is the tracking list: <region>, ..., <region>",
    "This is the region's tracking list: <region> ... <region>",
]


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class LiteralText:
    text: str


@dataclass(frozen=True)
class Slot:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in SLOT_KINDS:
            raise ValueError(f"unknown slot kind {self.kind!r}")
        if self.index < 0:
            raise ValueError(f"slot index must be >= 0, got {self.index}")


Segment = Union[LiteralText, Slot]


class PromptSequence:
    """Canonical segment list: adjacent literals merged, empty literals dropped."""

    def __init__(self, segments: Iterable[Segment]):
        merged: list[Segment] = []
        for seg in segments:
            if isinstance(seg, LiteralText):
                if not seg.text:
                    continue
                if merged and isinstance(merged[-1], LiteralText):
                    merged[-1] = LiteralText(merged[-1].text + seg.text)
                    continue
            merged.append(seg)
        self.segments = merged

    def __eq__(self, other) -> bool:
        return isinstance(other, PromptSequence) and self.segments == other.segments

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def slots(self) -> list[Slot]:
        return [s for s in self.segments if isinstance(s, Slot)]

    def slot_counts(self) -> dict[str, int]:
        counts = {kind: 0 for kind in SLOT_KINDS}
        for s in self.slots():
            counts[s.kind] += 1
        return counts

    def literal_text(self) -> str:
        return "".join(s.text for s in self.segments if isinstance(s, LiteralText))


@dataclass
class TemplateLibrary:
    """Instruction texts for each stage; user-extensible via a JSON file.

    Every refer instruction carries exactly one <region> placeholder and
    every track instruction exactly one placeholder run, so expanded slot
    counts stay exact.
    """

    stage1_instruction: str = DEFAULT_STAGE1_INSTRUCTION
    stage2_instructions: Sequence[str] = tuple(DEFAULT_STAGE2_INSTRUCTIONS)
    refer_instructions: Sequence[str] = tuple(DEFAULT_REFER_INSTRUCTIONS)
    track_instructions: Sequence[str] = tuple(DEFAULT_TRACK_INSTRUCTIONS)

    def __post_init__(self):
        if not self.stage1_instruction:
            raise TemplateError("stage1_instruction must be non-empty")
        for name in ("stage2_instructions", "refer_instructions", "track_instructions"):
            if not list(getattr(self, name)):
                raise TemplateError(f"{name} must be non-empty")
        for text in self.refer_instructions:
            if text.count(REGION_TOKEN) != 1:
                raise TemplateError(
                    f"refer instruction needs exactly one {REGION_TOKEN}: {text!r}")
        for text in self.track_instructions:
            runs = _RUN_RE.findall(text)
            if len(runs) != 1:
                raise TemplateError(
                    f"track instruction needs exactly one {REGION_TOKEN} run: {text!r}")

    @classmethod
    def from_json(cls, text: str) -> "TemplateLibrary":
        d = json.loads(text)
        return cls(
            stage1_instruction=d.get("stage1_instruction", DEFAULT_STAGE1_INSTRUCTION),
            stage2_instructions=d.get("stage2_instructions", DEFAULT_STAGE2_INSTRUCTIONS),
            refer_instructions=d.get("refer_instructions", DEFAULT_REFER_INSTRUCTIONS),
            track_instructions=d.get("track_instructions", DEFAULT_TRACK_INSTRUCTIONS),
        )

    @classmethod
    def load(cls, path) -> "TemplateLibrary":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(f.read())

    def to_json(self) -> str:
        return json.dumps({
            "stage1_instruction": self.stage1_instruction,
            "stage2_instructions": list(self.stage2_instructions),
            "refer_instructions": list(self.refer_instructions),
            "track_instructions": list(self.track_instructions),
        }, indent=2)


def _check_shapes(spatial: SpatialFeatures, temporal: TemporalFeatures,
                  expect_grid_w: Optional[int], expect_grid_h: Optional[int],
                  expect_t: Optional[int]) -> None:
    if expect_grid_w is not None and spatial.grid_w != expect_grid_w:
        raise ValueError(f"spatial grid width {spatial.grid_w} != declared {expect_grid_w}")
    if expect_grid_h is not None and spatial.grid_h != expect_grid_h:
        raise ValueError(f"spatial grid height {spatial.grid_h} != declared {expect_grid_h}")
    if expect_t is not None and temporal.t_count != expect_t:
        raise ValueError(f"temporal length {temporal.t_count} != declared {expect_t}")


def _video_segments(spatial: SpatialFeatures, temporal: TemporalFeatures) -> list[Segment]:
    segs: list[Segment] = [LiteralText("User: ")]
    segs.extend(Slot("spatial", i) for i in range(spatial.token_count))
    segs.extend(Slot("temporal", i) for i in range(temporal.t_count))
    return segs


def assemble_stage1(spatial: SpatialFeatures, temporal: TemporalFeatures,
                    lib: Optional[TemplateLibrary] = None,
                    expect_grid_w: Optional[int] = None,
                    expect_grid_h: Optional[int] = None,
                    expect_t: Optional[int] = None) -> PromptSequence:
    """Video tokens followed by the fixed summary instruction."""
    lib = lib or TemplateLibrary()
    _check_shapes(spatial, temporal, expect_grid_w, expect_grid_h, expect_t)
    segs = _video_segments(spatial, temporal)
    segs.append(LiteralText(f" {lib.stage1_instruction} Assistant:"))
    return PromptSequence(segs)


def assemble_stage2(spatial: SpatialFeatures, temporal: TemporalFeatures,
                    lib: Optional[TemplateLibrary] = None, seed: int = 0,
                    expect_grid_w: Optional[int] = None,
                    expect_grid_h: Optional[int] = None,
                    expect_t: Optional[int] = None) -> PromptSequence:
    """Video tokens followed by a seeded choice of task instruction."""
    lib = lib or TemplateLibrary()
    _check_shapes(spatial, temporal, expect_grid_w, expect_grid_h, expect_t)
    rng = random.Random(seed)
    instruction = rng.choice(list(lib.stage2_instructions))
    segs = _video_segments(spatial, temporal)
    segs.append(LiteralText(f" {instruction} Assistant:"))
    return PromptSequence(segs)


def assemble_refer(spatial: SpatialFeatures, temporal: TemporalFeatures,
                   seed_roi: RoiFeature, selected: Sequence[RoiFeature],
                   lib: Optional[TemplateLibrary] = None, seed: int = 0,
                   expect_grid_w: Optional[int] = None,
                   expect_grid_h: Optional[int] = None,
                   expect_t: Optional[int] = None) -> PromptSequence:
    """Referring prompt: video tokens, queried region, then the tracked regions.

    Instruction texts are seeded-random draws from the library; the refer
    instruction's <region> becomes the single seed-region slot and the
    track instruction's placeholder run expands to one slot per selected
    RoI, in frame order. Total slots: W'*H' + T + 1 + len(selected).
    """
    lib = lib or TemplateLibrary()
    if seed_roi is None:
        raise ValueError("seed RoI is required")
    if len(selected) == 0:
        raise ValueError("selection must contain at least one RoI")
    _check_shapes(spatial, temporal, expect_grid_w, expect_grid_h, expect_t)
    rng = random.Random(seed)
    refer_text = rng.choice(list(lib.refer_instructions))
    track_text = rng.choice(list(lib.track_instructions))

    segs = _video_segments(spatial, temporal)
    segs.append(LiteralText(" "))

    before, after = refer_text.split(REGION_TOKEN)
    segs.append(LiteralText(before))
    segs.append(Slot("seed_region", 0))
    segs.append(LiteralText(after))
    segs.append(LiteralText(" "))

    run = _RUN_RE.search(track_text)
    segs.append(LiteralText(track_text[: run.start()]))
    for i in range(len(selected)):
        if i:
            segs.append(LiteralText(", "))
        segs.append(Slot("track_region", i))
    segs.append(LiteralText(track_text[run.end():]))
    segs.append(LiteralText(" Assistant:"))
    return PromptSequence(segs)


def render_debug(p: PromptSequence) -> str:
    """Human-readable rendering: literals verbatim, slots as <slot:kind:index>."""
    parts = []
    for seg in p:
        if isinstance(seg, LiteralText):
            parts.append(seg.text)
        else:
            parts.append(f"<slot:{seg.kind}:{seg.index}>")
    return "".join(parts)


def parse_debug(text: str) -> PromptSequence:
    """Inverse of render_debug for literals that contain no slot markers."""
    segs: list[Segment] = []
    pos = 0
    for m in _SLOT_RE.finditer(text):
        if m.start() > pos:
            segs.append(LiteralText(text[pos:m.start()]))
        segs.append(Slot(m.group(1), int(m.group(2))))
        pos = m.end()
    if pos < len(text):
        segs.append(LiteralText(text[pos:]))
    return PromptSequence(segs)
