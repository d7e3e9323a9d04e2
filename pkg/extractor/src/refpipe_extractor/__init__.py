"""Export pretrained-encoder patch features for sampled video frames."""

from .artf import read_artf, write_artf
from .encoder import ClipPatchEncoder
from .frames import read_frames_dir, read_video_frames, video_metadata
from .sampling import ExtractionManifest, sample_frames

__version__ = "0.1.0"

__all__ = ["ClipPatchEncoder", "ExtractionManifest", "read_artf",
           "read_frames_dir", "read_video_frames", "sample_frames",
           "video_metadata", "write_artf"]
