"""End-to-end composition: track, subsample, pool regions, select, assemble."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

from .config import PipelineConfig
from .diversity import DiversityReport, analyze
from .feature_store import FrameFeatureSequence
from .geometry import TrackedBox, TrackingList
from .pooling import SpatialFeatures, TemporalFeatures, spatial_pool, temporal_pool
from .prompts import PromptSequence, TemplateLibrary, assemble_refer
from .roi_align import RoiAlignExtractor, RoiFeature, stack_vectors
from .selection import RoiSelector, select_rois
from .tracking import CorrelationTracker, sample_track


class StageError(RuntimeError):
    """Component failure annotated with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


@dataclass
class PipelineResult:
    track: TrackingList
    sampled: TrackingList
    rois: list[RoiFeature]
    selected: list[RoiFeature]
    spatial: SpatialFeatures
    temporal: TemporalFeatures
    prompt: PromptSequence
    report: DiversityReport


def run_pipeline(cfg: PipelineConfig, seq: FrameFeatureSequence,
                 seed_box: TrackedBox,
                 lib: TemplateLibrary | None = None) -> PipelineResult:
    """Track the seed, pick representatives, pool, and assemble the prompt.

    Every stage failure surfaces as a StageError naming the stage. All
    randomness comes from the config's seeds, so a fixed config gives
    identical results on every run.
    """
    lib = lib or (TemplateLibrary.load(cfg.templates_path) if cfg.templates_path
                  else TemplateLibrary())
    extractor = RoiAlignExtractor(grid_size=cfg.grid_size,
                                  samples_per_bin=cfg.samples_per_bin)
    with _stage("track"):
        tracker = CorrelationTracker(
            search_radius=cfg.search_radius, min_similarity=cfg.min_similarity,
            step=cfg.track_step, grid_size=cfg.grid_size,
            samples_per_bin=cfg.samples_per_bin)
        track = tracker.track(seq, seed_box)
    with _stage("sample"):
        sampled = sample_track(track, cfg.tracked_count)
    with _stage("roialign"):
        rois = extractor.extract_track(seq, sampled)
        seed_roi = extractor.extract(seq.data[seed_box.t], seed_box.box, t=seed_box.t)
    with _stage("select"):
        selector = RoiSelector(m=cfg.selected_count, method=cfg.method,
                               restarts=cfg.restarts, max_iters=cfg.max_iters,
                               seed=cfg.selection_seed,
                               representative=cfg.representative)
        selected = select_rois(rois, selector)
    with _stage("pool"):
        spatial = spatial_pool(seq)
        temporal = temporal_pool(seq)
    with _stage("prompt"):
        prompt = assemble_refer(spatial, temporal, seed_roi, selected, lib,
                                seed=cfg.template_seed)
    with _stage("analyze"):
        report = analyze(stack_vectors(selected), bins=cfg.bins)
    return PipelineResult(track=track, sampled=sampled, rois=rois,
                          selected=selected, spatial=spatial, temporal=temporal,
                          prompt=prompt, report=report)
