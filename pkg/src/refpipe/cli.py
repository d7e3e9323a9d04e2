"""Batch command-line surface for the pipeline.

Subcommands: track, reconcile, pool, roialign, select, prompt, analyze,
evaluate, curate, run. Exit code is 0 iff no stage errored; stderr carries
stage-labeled diagnostics, stdout only data. REFPIPE_THREADS caps the
worker pool used by multi-record commands.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import curation, feature_store
from .config import PipelineConfig
from .diversity import analyze
from .geometry import Box, TrackedBox, TrackingList
from .metrics import CaptionRecord, evaluate_corpus
from .pipeline import StageError, run_pipeline
from .pooling import SpatialFeatures, TemporalFeatures, spatial_pool, temporal_pool
from .prompts import (TemplateLibrary, assemble_refer, assemble_stage1,
                      assemble_stage2, render_debug)
from .roi_align import RoiAlignExtractor, RoiFeature, stack_vectors
from .selection import RoiSelector, select_rois, selection_report
from .tracking import AnnotationSet, CorrelationTracker, reconcile

REPORT_COLUMNS = ["method", "n_rois", "entropy_bits", "consecutive_diversity",
                  "pairwise_diversity"]


def worker_count() -> int:
    raw = os.environ.get("REFPIPE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(8, os.cpu_count() or 1)


def parse_seed_box(text: str) -> TrackedBox:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 5:
        raise ValueError(f"seed box must be 't,x1,y1,x2,y2', got {text!r}")
    return TrackedBox(int(parts[0]), Box(*(float(p) for p in parts[1:])))


def load_templates(path) -> TemplateLibrary:
    return TemplateLibrary.load(path) if path else TemplateLibrary()


def emit_plots(rows: list[dict], csv_path, png_path=None) -> None:
    """Write per-method comparison rows as CSV (fixed column order), and
    optionally render a bar chart."""
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col, "") for col in REPORT_COLUMNS})
    if png_path:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        methods = [str(r.get("method", i)) for i, r in enumerate(rows)]
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        for ax, key in zip(axes, ("entropy_bits", "consecutive_diversity")):
            ax.bar(methods, [float(r[key]) for r in rows])
            ax.set_title(key)
            ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        fig.savefig(png_path)
        plt.close(fig)


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


# ------------------------------------------------------------- commands

def cmd_track(args) -> int:
    seq = feature_store.read_feature_sequence(args.features)
    tracker = CorrelationTracker(search_radius=args.radius,
                                 min_similarity=args.min_similarity,
                                 step=args.step, grid_size=args.grid_size,
                                 samples_per_bin=args.samples)
    track = tracker.track(seq, parse_seed_box(args.seed))
    track.save(args.out)
    return 0


def cmd_reconcile(args) -> int:
    list_a = TrackingList.load(args.a)
    list_b = TrackingList.load(args.b) if args.b else TrackingList()
    gt = AnnotationSet.load(args.gt)
    merged = reconcile(list_a, list_b, gt, args.tau)
    merged.save(args.out)
    return 0


def cmd_pool(args) -> int:
    seq = feature_store.read_feature_sequence(args.features)
    feature_store.write_tensor(spatial_pool(seq).data, args.out_spatial)
    feature_store.write_tensor(temporal_pool(seq).data, args.out_temporal)
    return 0


def cmd_roialign(args) -> int:
    seq = feature_store.read_feature_sequence(args.features)
    track = TrackingList.load(args.boxes)
    extractor = RoiAlignExtractor(grid_size=args.grid_size,
                                  samples_per_bin=args.samples)
    rois = extractor.extract_track(seq, track)
    feature_store.write_tensor(stack_vectors(rois).astype(np.float32), args.out)
    return 0


def _load_roi_features(rois_path, track_path) -> list[RoiFeature]:
    vectors = feature_store.read_array(rois_path)
    if vectors.ndim != 2:
        raise ValueError(f"RoI file must be rank 2 (n, D), got rank {vectors.ndim}")
    track = TrackingList.load(track_path)
    if len(track) != vectors.shape[0]:
        raise ValueError(
            f"{vectors.shape[0]} RoI vectors but {len(track)} tracking entries")
    return [RoiFeature(source=e, vector=v) for e, v in zip(track, vectors)]


def cmd_select(args) -> int:
    rois = _load_roi_features(args.rois, args.track)
    selector = RoiSelector(m=args.m, method=args.method, restarts=args.restarts,
                           max_iters=args.max_iters, seed=args.seed,
                           representative=args.representative)
    selected = select_rois(rois, selector)
    TrackingList(r.source for r in selected).save(args.out)
    if args.out_rois:
        feature_store.write_tensor(stack_vectors(selected).astype(np.float32),
                                   args.out_rois)
    if args.report_csv:
        rows = selection_report(rois, selector, bins=args.bins)
        emit_plots(rows, args.report_csv, args.report_png)
    return 0


def cmd_prompt(args) -> int:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    grid_w = args.grid_w or cfg.grid_w
    grid_h = args.grid_h or cfg.grid_h
    t_count = args.t or cfg.t_count
    lib = load_templates(args.templates)
    spatial = SpatialFeatures(np.zeros((grid_h, grid_w, 1), dtype=np.float32))
    temporal = TemporalFeatures(np.zeros((t_count, 1), dtype=np.float32))
    if args.stage == "stage1":
        prompt = assemble_stage1(spatial, temporal, lib)
    elif args.stage == "stage2":
        prompt = assemble_stage2(spatial, temporal, lib, seed=args.seed)
    else:
        placeholder = np.zeros(1, dtype=np.float32)
        dummy = [RoiFeature(source=TrackedBox(i, Box(0, 0, 1, 1)), vector=placeholder)
                 for i in range(args.m)]
        prompt = assemble_refer(spatial, temporal, dummy[0], dummy, lib,
                                seed=args.seed)
    rendered = render_debug(prompt)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(rendered + "\n")
    else:
        print(rendered)
    return 0


def cmd_analyze(args) -> int:
    vectors = feature_store.read_array(args.rois)
    if vectors.ndim != 2:
        raise ValueError(f"RoI file must be rank 2 (n, D), got rank {vectors.ndim}")
    report = analyze(vectors, bins=args.bins, metric=args.metric)
    _write_json(report.to_dict(), args.out)
    if args.csv:
        emit_plots([{"method": args.metric, **report.to_dict()}], args.csv)
    return 0


def _load_caption_corpus(pred_path, refs_path) -> list[CaptionRecord]:
    refs = {}
    with open(refs_path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                refs[str(d["id"])] = list(d["references"])
    corpus = []
    with open(pred_path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            rid = str(d["id"])
            if rid not in refs:
                raise ValueError(f"prediction id {rid!r} has no references")
            corpus.append(CaptionRecord(id=rid, references=refs[rid],
                                        hypothesis=d["hypothesis"]))
    if not corpus:
        raise ValueError("no prediction records found")
    return corpus


def cmd_evaluate(args) -> int:
    corpus = _load_caption_corpus(args.pred, args.refs)
    report = evaluate_corpus(corpus, smooth_eps=args.smooth_eps,
                             cider_variant=args.cider_variant)
    _write_json(report.to_dict(), args.out)
    return 0


def cmd_curate(args) -> int:
    adapter = curation.get_adapter(args.adapter)
    lib = load_templates(args.templates)
    with open(args.src, "r", encoding="utf-8") as f:
        raw_records = [json.loads(line) for line in f if line.strip()]
    annotations = [curation.apply_adapter(raw, adapter) for raw in raw_records]

    def one(ann):
        return curation.curate_annotation(ann, adapter, args.seed, lib, tau=args.tau)

    pairs = []
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for chunk in pool.map(one, annotations):
            pairs.extend(chunk)
    curation.export_dataset(pairs, args.out)
    return 0


def cmd_run(args) -> int:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    cfg = cfg.with_overrides({
        "tracked_count": args.m_prime, "selected_count": args.m,
        "method": args.method, "selection_seed": args.seed,
        "template_seed": args.template_seed, "bins": args.bins,
        "min_similarity": args.min_similarity,
        "templates_path": args.templates,
    })
    seq = feature_store.read_feature_sequence(args.features)
    result = run_pipeline(cfg, seq, parse_seed_box(args.seed_box))

    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    prompt_path = os.path.join(out_dir, "prompt.txt")
    with open(prompt_path, "w", encoding="utf-8") as f:
        f.write(render_debug(result.prompt) + "\n")
    selected_path = os.path.join(out_dir, "selected.jsonl")
    TrackingList(r.source for r in result.selected).save(selected_path)
    report_path = os.path.join(out_dir, "report.json")
    _write_json(result.report.to_dict(), report_path)
    if args.keep_intermediates:
        result.track.save(os.path.join(out_dir, "track.jsonl"))
        result.sampled.save(os.path.join(out_dir, "sampled.jsonl"))
        feature_store.write_tensor(stack_vectors(result.rois).astype(np.float32),
                                   os.path.join(out_dir, "rois.artf"))
        feature_store.write_tensor(stack_vectors(result.selected).astype(np.float32),
                                   os.path.join(out_dir, "selected.artf"))
        feature_store.write_tensor(result.spatial.data,
                                   os.path.join(out_dir, "spatial.artf"))
        feature_store.write_tensor(result.temporal.data,
                                   os.path.join(out_dir, "temporal.artf"))
    manifest = {
        "prompt": prompt_path,
        "selected": selected_path,
        "report": report_path,
        "n_tracked": len(result.track),
        "n_selected": len(result.selected),
        "slot_counts": result.prompt.slot_counts(),
    }
    print(json.dumps(manifest))
    return 0


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refpipe",
        description="Video RoI tracking, selection, and evaluation pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run the baseline tracker over a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--seed", required=True, help="seed box as 't,x1,y1,x2,y2'")
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--min-similarity", type=float, default=0.3)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--grid-size", type=int, default=7)
    p.add_argument("--samples", type=int, default=2)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("reconcile", help="merge tracking lists, filtering by IoU vs ground truth")
    p.add_argument("--a", required=True)
    p.add_argument("--b", default=None)
    p.add_argument("--gt", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconcile)

    p = sub.add_parser("pool", help="compute spatial and temporal feature slices")
    p.add_argument("--features", required=True)
    p.add_argument("--out-spatial", required=True)
    p.add_argument("--out-temporal", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("roialign", help="pool per-box feature vectors from a sequence")
    p.add_argument("--features", required=True)
    p.add_argument("--boxes", required=True, help="TrackedBox JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--grid-size", type=int, default=7)
    p.add_argument("--samples", type=int, default=2)
    p.set_defaults(func=cmd_roialign)

    p = sub.add_parser("select", help="pick representative RoIs")
    p.add_argument("--rois", required=True, help="rank-2 ARTF of RoI vectors")
    p.add_argument("--track", required=True, help="TrackedBox JSONL aligned with --rois")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--method", default="clustering",
                   choices=["clustering", "uniform", "random", "none"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--representative", default="medoid",
                   choices=["medoid", "random_member"])
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--out-rois", default=None)
    p.add_argument("--report-csv", default=None,
                   help="write a per-method diversity comparison CSV")
    p.add_argument("--report-png", default=None)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("prompt", help="render a conversation template")
    p.add_argument("--stage", default="refer", choices=["stage1", "stage2", "refer"])
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--templates", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--grid-w", type=int, default=None)
    p.add_argument("--grid-h", type=int, default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("analyze", help="entropy and diversity of an RoI set")
    p.add_argument("--rois", required=True)
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--metric", default="cosine", choices=["cosine", "l2"])
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="caption metrics over prediction/reference JSONL")
    p.add_argument("--pred", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--smooth-eps", type=float, default=0.0)
    p.add_argument("--cider-variant", default="cider", choices=["cider", "cider-d"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("curate", help="build QA records from source annotations")
    p.add_argument("--src", required=True)
    p.add_argument("--adapter", required=True,
                   help="builtin adapter name or JSON mapping file")
    p.add_argument("--templates", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("run", help="full pipeline: track, select, pool, assemble, analyze")
    p.add_argument("--features", required=True)
    p.add_argument("--seed-box", required=True, help="'t,x1,y1,x2,y2'")
    p.add_argument("--config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--keep-intermediates", action="store_true")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-prime", type=int, default=None)
    p.add_argument("--method", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--template-seed", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--min-similarity", type=float, default=None)
    p.add_argument("--templates", default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except Exception as e:
        print(f"[{args.command}] error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
