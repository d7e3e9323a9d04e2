"""refpipe: target-specific video feature extraction and evaluation.

Given per-frame feature maps and a seed box, the pipeline tracks the
target, selects representative regions by clustering their pooled
features, slices the video into spatial and temporal tokens, and
assembles the interleaved text/placeholder prompt; companion modules
score captions and curate QA datasets.
"""

from .config import PipelineConfig
from .curation import (QaPair, SourceAnnotation, build_qa, clip_crop,
                       compose_caption, export_dataset, load_dataset,
                       mask_to_bbox)
from .diversity import (DiversityReport, analyze, entropy_gain,
                        feature_entropy, inter_frame_diversity)
from .feature_store import (FrameFeatureSequence, WeightMatrix, read_tensor,
                            slice_frame, write_tensor)
from .geometry import Box, TrackedBox, TrackingList, clip_box, iou, rescale_box
from .metrics import (CaptionRecord, MetricReport, bleu4, cider,
                      evaluate_corpus, meteor_exact, rouge_l, tokenize)
from .pipeline import PipelineResult, StageError, run_pipeline
from .pooling import SpatialFeatures, TemporalFeatures, spatial_pool, temporal_pool
from .projection import (LinearProjector, MlpProjector, linear_project,
                         mlp_project)
from .prompts import (PromptSequence, TemplateLibrary, assemble_refer,
                      assemble_stage1, assemble_stage2, parse_debug,
                      render_debug)
from .roi_align import RoiAlignExtractor, RoiFeature, roi_align, stack_vectors
from .selection import (Clustering, KMeans, RoiSelector, kmeans, select_rois,
                        selection_report)
from .tracking import (AnnotationSet, CorrelationTracker, reconcile,
                       sample_track, track_with_dual_references)

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "Box", "CaptionRecord", "Clustering", "CorrelationTracker",
    "DiversityReport", "FrameFeatureSequence", "KMeans", "LinearProjector",
    "MetricReport", "MlpProjector", "PipelineConfig", "PipelineResult",
    "PromptSequence", "QaPair", "RoiAlignExtractor", "RoiFeature", "RoiSelector",
    "SourceAnnotation", "SpatialFeatures", "StageError", "TemplateLibrary",
    "TemporalFeatures", "TrackedBox", "TrackingList", "WeightMatrix", "analyze",
    "assemble_refer", "assemble_stage1", "assemble_stage2", "bleu4", "build_qa",
    "cider", "clip_box", "clip_crop", "compose_caption", "entropy_gain",
    "evaluate_corpus", "export_dataset", "feature_entropy",
    "inter_frame_diversity", "iou", "kmeans", "linear_project", "load_dataset",
    "mask_to_bbox", "meteor_exact", "mlp_project", "parse_debug", "read_tensor",
    "render_debug", "rescale_box", "roi_align", "rouge_l", "run_pipeline",
    "sample_track", "select_rois", "selection_report", "slice_frame",
    "spatial_pool", "stack_vectors", "temporal_pool", "tokenize",
    "track_with_dual_references", "write_tensor",
]
