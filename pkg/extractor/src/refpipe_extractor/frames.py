"""Frame ingestion: decode a video at sampled timestamps, or read an image
directory (one file per frame, sorted by name)."""
from __future__ import annotations

import os

import cv2
import numpy as np

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


def _resize_rgb(frame_bgr: np.ndarray, resolution: int) -> np.ndarray:
    rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
    return cv2.resize(rgb, (resolution, resolution), interpolation=cv2.INTER_AREA)


def video_metadata(path: str) -> tuple[float, float]:
    """(duration seconds, fps) of a decodable video."""
    cap = cv2.VideoCapture(path)
    try:
        if not cap.isOpened():
            raise IOError(f"cannot decode video {path!r}")
        fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
        count = cap.get(cv2.CAP_PROP_FRAME_COUNT) or 0.0
        if fps <= 0 or count <= 0:
            raise IOError(f"video {path!r} reports no usable fps/frame count")
        return count / fps, fps
    finally:
        cap.release()


def read_video_frames(path: str, timestamps: list[float],
                      resolution: int = 224) -> np.ndarray:
    """Decode the frame nearest each timestamp, resized to a square RGB map."""
    _, fps = video_metadata(path)
    wanted = [int(round(ts * fps)) for ts in timestamps]
    cap = cv2.VideoCapture(path)
    try:
        frames: dict[int, np.ndarray] = {}
        need = sorted(set(wanted))
        idx = 0
        pos = 0
        ok, frame = cap.read()
        while ok and idx < len(need):
            if pos == need[idx]:
                frames[pos] = _resize_rgb(frame, resolution)
                idx += 1
            ok, frame = cap.read()
            pos += 1
        if idx < len(need):
            # timestamps at the tail can round past the last frame
            last = frames[max(frames)] if frames else None
            if last is None:
                raise IOError(f"no frames decoded from {path!r}")
            for miss in need[idx:]:
                frames[miss] = last
        return np.stack([frames[i] for i in wanted])
    finally:
        cap.release()


def read_frames_dir(path: str, t: int, resolution: int = 224) -> np.ndarray:
    """Sample t frames evenly from an image directory."""
    names = sorted(f for f in os.listdir(path)
                   if f.lower().endswith(IMAGE_EXTENSIONS))
    if not names:
        raise IOError(f"no image files in {path!r}")
    n = len(names)
    t = min(t, n)
    indices = [0] if t == 1 else [round(i * (n - 1) / (t - 1)) for i in range(t)]
    frames = []
    for i in indices:
        img = cv2.imread(os.path.join(path, names[i]), cv2.IMREAD_COLOR)
        if img is None:
            raise IOError(f"cannot read image {names[i]!r}")
        frames.append(_resize_rgb(img, resolution))
    return np.stack(frames)
