"""One video file in, artifact contents out.

The embedding and OCR passes share the frame sampler, so a combined run
decodes the video once. Heavy stages (the embedding backbone, the glyph
atlas) are injectable so batch callers can reuse them across videos;
nothing here holds state between videos.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .artifacts import FrameRegions
from .config import ExtractorConfig
from .embed import FrameEmbedder
from .ocr import GlyphRecognizer, extract_frame_text
from .video import iter_sampled_frames

__all__ = ["VideoEmbeddings", "extract_embeddings", "extract_text", "extract_artifacts"]


@dataclass(frozen=True)
class VideoEmbeddings:
    """Embedding rows for one video, row i = sampled frame ordinal i."""

    matrix: np.ndarray
    sample_stride: int

    @property
    def frame_count(self) -> int:
        return int(self.matrix.shape[0])


def extract_embeddings(
    video_file: Path | str, cfg: ExtractorConfig, embedder: FrameEmbedder | None = None
) -> VideoEmbeddings:
    """Sample, resize, and embed a video; one row per sampled frame."""
    if embedder is None:
        embedder = FrameEmbedder(cfg)
    rows = [
        embedder.embed(sample.image)
        for sample in iter_sampled_frames(video_file, cfg.sample_stride)
    ]
    return VideoEmbeddings(matrix=np.stack(rows), sample_stride=cfg.sample_stride)


def extract_text(
    video_file: Path | str, cfg: ExtractorConfig, recognizer: GlyphRecognizer | None = None
) -> tuple[FrameRegions, ...]:
    """Detect and read text in every sampled frame.

    Frames without any region above the minimum-area filter produce an
    entry with an empty region list, keeping ordinals aligned with the
    embedding rows.
    """
    if recognizer is None:
        recognizer = GlyphRecognizer()
    return tuple(
        FrameRegions(sample.ordinal, extract_frame_text(sample.image, cfg, recognizer))
        for sample in iter_sampled_frames(video_file, cfg.sample_stride)
    )


def extract_artifacts(
    video_file: Path | str,
    cfg: ExtractorConfig,
    embedder: FrameEmbedder | None = None,
    recognizer: GlyphRecognizer | None = None,
) -> tuple[VideoEmbeddings, tuple[FrameRegions, ...]]:
    """Both artifact payloads from a single decoding pass."""
    if embedder is None:
        embedder = FrameEmbedder(cfg)
    if recognizer is None:
        recognizer = GlyphRecognizer()
    rows: list[np.ndarray] = []
    texts: list[FrameRegions] = []
    for sample in iter_sampled_frames(video_file, cfg.sample_stride):
        rows.append(embedder.embed(sample.image))
        texts.append(FrameRegions(sample.ordinal, extract_frame_text(sample.image, cfg, recognizer)))
    return (
        VideoEmbeddings(matrix=np.stack(rows), sample_stride=cfg.sample_stride),
        tuple(texts),
    )
