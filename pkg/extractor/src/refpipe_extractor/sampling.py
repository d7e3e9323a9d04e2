"""Uniform temporal frame sampling and the extraction manifest."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field


def sample_frames(duration: float, fps: float, t: int) -> list[float]:
    """T evenly spaced timestamps in [0, duration).

    When t exceeds the available frame count, the count is clamped (with a
    warning) so no frame is sampled twice.
    """
    if duration <= 0 or fps <= 0:
        raise ValueError(f"duration and fps must be positive, got {duration}, {fps}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    total_frames = max(1, int(duration * fps))
    if t > total_frames:
        warnings.warn(f"requested {t} samples but the video has only "
                      f"{total_frames} frames; clamping", stacklevel=2)
        t = total_frames
    return [k * duration / t for k in range(t)]


@dataclass
class ExtractionManifest:
    """What to extract: source video, sample count, geometry, destination."""

    video: str
    t_count: int
    out_path: str
    resolution: int = 224
    timestamps: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.t_count < 1:
            raise ValueError(f"t_count must be >= 1, got {self.t_count}")
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if b <= a:
                raise ValueError("timestamps must be strictly increasing")
