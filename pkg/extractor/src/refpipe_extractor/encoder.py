"""Patch-token extraction from a CLIP-style vision transformer.

Exports the pre-pooling patch grid (CLS token dropped), not the pooled
embedding, because the downstream pipeline averages over the spatial
grid itself. The penultimate layer is the default token source; "final"
selects the last hidden layer instead.
"""
from __future__ import annotations

import numpy as np
import torch
from transformers import CLIPVisionConfig, CLIPVisionModel

DEFAULT_MODEL = "openai/clip-vit-large-patch14"
# CLIP preprocessing constants
_MEAN = np.array([0.48145466, 0.4578275, 0.40821073], dtype=np.float32)
_STD = np.array([0.26862954, 0.26130258, 0.27577711], dtype=np.float32)

LAYERS = ("penultimate", "final")


class ClipPatchEncoder:
    """Wraps a vision transformer and returns per-frame patch grids."""

    def __init__(self, model: CLIPVisionModel, layer: str = "penultimate"):
        if layer not in LAYERS:
            raise ValueError(f"layer must be one of {LAYERS}, got {layer!r}")
        self.model = model.eval()
        self.layer = layer
        cfg = model.config
        self.patch_size = cfg.patch_size
        self.hidden_size = cfg.hidden_size
        self.image_size = cfg.image_size

    @classmethod
    def from_pretrained(cls, name_or_path: str = DEFAULT_MODEL,
                        layer: str = "penultimate") -> "ClipPatchEncoder":
        return cls(CLIPVisionModel.from_pretrained(name_or_path), layer)

    @classmethod
    def untrained(cls, layer: str = "penultimate", hidden_size: int = 1024,
                  num_layers: int = 2, patch_size: int = 14,
                  image_size: int = 224, seed: int = 0) -> "ClipPatchEncoder":
        """Randomly initialized encoder with the right output geometry.

        Useful for dry-running the pipeline where no weights are
        available; features are meaningless but shapes and determinism
        match the real thing.
        """
        torch.manual_seed(seed)
        config = CLIPVisionConfig(
            hidden_size=hidden_size, intermediate_size=hidden_size,
            num_hidden_layers=num_layers,
            num_attention_heads=max(1, hidden_size // 64),
            image_size=image_size, patch_size=patch_size)
        return cls(CLIPVisionModel(config), layer)

    @property
    def grid_size(self) -> int:
        return self.image_size // self.patch_size

    def preprocess(self, frames: np.ndarray) -> torch.Tensor:
        """uint8 RGB (N, H, W, 3) in [0, 255] -> normalized NCHW float tensor."""
        frames = np.asarray(frames)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise ValueError(f"frames must be (N, H, W, 3), got {frames.shape}")
        if frames.shape[1] != self.image_size or frames.shape[2] != self.image_size:
            raise ValueError(
                f"frames must be {self.image_size}x{self.image_size}, "
                f"got {frames.shape[1]}x{frames.shape[2]}")
        x = (frames.astype(np.float32) / 255.0 - _MEAN) / _STD
        return torch.from_numpy(x.transpose(0, 3, 1, 2))

    @torch.no_grad()
    def encode(self, frames: np.ndarray, batch_size: int = 8) -> np.ndarray:
        """Encode frames into (N, grid, grid, hidden) float32 patch grids."""
        pixels = self.preprocess(frames)
        g = self.grid_size
        chunks = []
        for start in range(0, pixels.shape[0], batch_size):
            batch = pixels[start:start + batch_size]
            out = self.model(pixel_values=batch, output_hidden_states=True)
            if self.layer == "final":
                tokens = out.last_hidden_state
            else:
                tokens = out.hidden_states[-2]
            patches = tokens[:, 1:, :]  # drop the CLS token
            if patches.shape[1] != g * g:
                raise ValueError(
                    f"expected {g * g} patch tokens, got {patches.shape[1]}")
            chunks.append(patches.reshape(-1, g, g, self.hidden_size)
                          .to(torch.float32).cpu().numpy())
        return np.concatenate(chunks, axis=0)
