"""Pipeline configuration: one TOML or JSON file, with flag overrides winning."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .feature_store import (DEFAULT_DIM, DEFAULT_RESOLUTION, DEFAULT_STRIDE,
                            DEFAULT_T)
from .roi_align import DEFAULT_GRID_SIZE, DEFAULT_SAMPLES_PER_BIN
from .selection import DEFAULT_SELECTED, DEFAULT_TRACKED


@dataclass
class PipelineConfig:
    # geometry
    resolution: int = DEFAULT_RESOLUTION
    stride: int = DEFAULT_STRIDE
    t_count: int = DEFAULT_T
    dim: int = DEFAULT_DIM
    # tracker
    search_radius: float = 2.0
    min_similarity: float = 0.3
    track_step: float = 1.0
    tau: float = 0.5
    # RoIAlign
    grid_size: int = DEFAULT_GRID_SIZE
    samples_per_bin: int = DEFAULT_SAMPLES_PER_BIN
    # selection
    tracked_count: int = DEFAULT_TRACKED
    selected_count: int = DEFAULT_SELECTED
    method: str = "clustering"
    representative: str = "medoid"
    restarts: int = 10
    max_iters: int = 100
    # analysis
    bins: int = 32
    # seeds: all randomness flows from these, never a global RNG
    selection_seed: int = 0
    template_seed: int = 0
    curation_seed: int = 0
    # paths
    templates_path: str | None = None

    @property
    def grid_w(self) -> int:
        return self.resolution // self.stride

    @property
    def grid_h(self) -> int:
        return self.resolution // self.stride

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            return cls.from_dict(tomllib.loads(text.decode("utf-8")))
        return cls.from_dict(json.loads(text.decode("utf-8")))

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return self.from_dict(d)
