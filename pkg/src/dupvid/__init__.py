"""Duplicate detection for video-based bug reports.

Ranks a corpus of screen recordings by similarity to a query recording using
three channels: visual words over frame embeddings, TF-IDF over on-screen
text, and an order-aware weighted longest common subsequence over the frame
sequence.
"""

__version__ = "0.1.0"

from .core import (
    FrameEmbedding,
    FrameText,
    SimilarityScore,
    TermVector,
    TextRegion,
    VideoArtifact,
    clamped_cosine,
    cosine_similarity,
)

__all__ = [
    "__version__",
    "FrameEmbedding",
    "FrameText",
    "SimilarityScore",
    "TermVector",
    "TextRegion",
    "VideoArtifact",
    "clamped_cosine",
    "cosine_similarity",
]
