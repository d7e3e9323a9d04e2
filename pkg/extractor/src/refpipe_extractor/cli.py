"""extract-features: encode sampled video frames into an ARTF tensor file."""
from __future__ import annotations

import argparse
import sys

from .artf import write_artf
from .encoder import DEFAULT_MODEL, ClipPatchEncoder
from .frames import read_frames_dir, read_video_frames, video_metadata
from .sampling import ExtractionManifest, sample_frames


def extract(manifest: ExtractionManifest, encoder: ClipPatchEncoder,
            frames_dir: str | None = None) -> str:
    """Run the manifest: sample, decode, encode, write. Returns the path."""
    if frames_dir is not None:
        frames = read_frames_dir(frames_dir, manifest.t_count, manifest.resolution)
    else:
        duration, fps = video_metadata(manifest.video)
        timestamps = manifest.timestamps or sample_frames(duration, fps,
                                                          manifest.t_count)
        frames = read_video_frames(manifest.video, timestamps, manifest.resolution)
    grids = encoder.encode(frames)
    write_artf(grids, manifest.out_path)
    return manifest.out_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract-features",
        description="Export encoder patch features for sampled video frames "
                    "in the ARTF interchange layout.")
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--video", help="decodable video file")
    src.add_argument("--frames-dir", help="directory of frame images instead of a video")
    parser.add_argument("--t", type=int, default=100, help="frames to sample")
    parser.add_argument("--out", required=True)
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="vision model name or local path")
    parser.add_argument("--layer", default="penultimate",
                        choices=["penultimate", "final"])
    parser.add_argument("--resolution", type=int, default=224)
    parser.add_argument("--untrained", action="store_true",
                        help="use a randomly initialized encoder (shape-faithful "
                             "dry run, no weights needed)")
    parser.add_argument("--untrained-layers", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.untrained:
            encoder = ClipPatchEncoder.untrained(
                layer=args.layer, num_layers=args.untrained_layers,
                image_size=args.resolution, seed=args.seed)
        else:
            encoder = ClipPatchEncoder.from_pretrained(args.model, args.layer)
        manifest = ExtractionManifest(video=args.video or "", t_count=args.t,
                                      out_path=args.out, resolution=args.resolution)
        path = extract(manifest, encoder, frames_dir=args.frames_dir)
    except Exception as e:
        print(f"[extract] error: {e}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
