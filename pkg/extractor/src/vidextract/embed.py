"""Frame embeddings from a vision transformer.

The backbone is a ViT with 16-pixel patches, base size: frames are resized,
normalized, and encoded, and the class-token output of the last block is
the 768-dimensional frame embedding.

Weights come from ``cfg.checkpoint`` when given (a state dict produced by
``torch.save``, typically self-supervised or fine-tuned externally).
Without one, the network initializes from a fixed seed: embeddings are
then untrained but fully deterministic, which keeps the artifact pipeline
and its consumers reproducible on machines that cannot fetch weights.
Nothing in the file formats depends on which weights produced the vectors.

Inference runs one frame at a time in deterministic mode, and frames with
identical pixels reuse the already-computed row via a content hash. Screen
recordings are mostly still, so the cache typically cuts the work by an
order of magnitude.
"""

from __future__ import annotations

import hashlib
import pickle

import cv2
import numpy as np
import torch
import torchvision

from .config import ExtractorConfig

__all__ = ["EmbeddingError", "FrameEmbedder"]

_INIT_SEED = 0x5EED
_CHANNEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_CHANNEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class EmbeddingError(RuntimeError):
    """The backbone could not be built or a checkpoint failed to load."""


class FrameEmbedder:
    """Embeds RGB uint8 frames; one (768,) float32 row per distinct frame."""

    def __init__(self, cfg: ExtractorConfig) -> None:
        width, height = cfg.resize
        if width != height:
            raise EmbeddingError(f"backbone needs a square input, got {width}x{height}")
        if width % 16 != 0:
            raise EmbeddingError(f"input size must be a multiple of the 16 px patch, got {width}")
        self._size = width
        torch.manual_seed(_INIT_SEED)
        model = torchvision.models.vit_b_16(weights=None, image_size=width)
        model.heads = torch.nn.Identity()
        if cfg.checkpoint is not None:
            try:
                state = torch.load(cfg.checkpoint, map_location="cpu", weights_only=True)
                model.load_state_dict(state)
            except (OSError, RuntimeError, ValueError, pickle.UnpicklingError) as exc:
                raise EmbeddingError(f"cannot load checkpoint {cfg.checkpoint}: {exc}") from exc
        model.eval()
        self._model = model
        self._dim = int(model.hidden_dim)
        self._cache: dict[bytes, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, frame: np.ndarray) -> np.ndarray:
        """Embed one RGB uint8 frame of any size; returns a (dim,) float32 row."""
        if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
            raise ValueError(
                f"frame must be RGB uint8 of shape (h, w, 3), got {frame.dtype} {frame.shape}"
            )
        resized = cv2.resize(frame, (self._size, self._size), interpolation=cv2.INTER_AREA)
        key = hashlib.blake2b(resized.tobytes(), digest_size=16).digest()
        cached = self._cache.get(key)
        if cached is not None:
            return cached.copy()

        scaled = (resized.astype(np.float32) / 255.0 - _CHANNEL_MEAN) / _CHANNEL_STD
        tensor = torch.from_numpy(scaled.transpose(2, 0, 1)).unsqueeze(0)
        with torch.inference_mode():
            row = self._model(tensor).squeeze(0).numpy().astype(np.float32, copy=True)
        self._cache[key] = row
        return row.copy()

    def embed_all(self, frames) -> np.ndarray:
        """Embed an iterable of frames into an (n, dim) float32 matrix."""
        rows = [self.embed(f) for f in frames]
        if not rows:
            return np.zeros((0, self._dim), dtype=np.float32)
        return np.stack(rows)
