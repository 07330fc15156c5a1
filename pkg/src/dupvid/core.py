"""Shared domain types and the vector math every similarity channel builds on."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

# Term identifiers: visual words are ints, text tokens are strings.
TermId = Union[int, str]

__all__ = [
    "TermId",
    "FrameEmbedding",
    "TextRegion",
    "FrameText",
    "VideoArtifact",
    "TermVector",
    "SimilarityScore",
    "cosine_similarity",
    "clamped_cosine",
]


@dataclass(frozen=True, eq=False)
class FrameEmbedding:
    """Dense embedding of one sampled frame."""

    frame_index: int  # ordinal among sampled frames, 0-based
    vector: np.ndarray  # shape (dim,), read-only after construction

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] < 1:
            raise ValueError(
                f"frame {self.frame_index}: embedding must be 1-D with dim >= 1, "
                f"got shape {np.shape(self.vector)}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"frame {self.frame_index}: embedding has non-finite values")
        if self.frame_index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.frame_index}")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class TextRegion:
    """One recognized text region inside a frame."""

    x: int
    y: int
    w: int
    h: int
    text: str
    confidence: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"text region must have positive size, got {self.w}x{self.h}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class FrameText:
    """All text regions recognized in one sampled frame."""

    frame_index: int
    regions: tuple[TextRegion, ...]

    def __post_init__(self) -> None:
        if self.frame_index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.frame_index}")
        object.__setattr__(self, "regions", tuple(self.regions))

    def reading_order(self) -> tuple[TextRegion, ...]:
        """Regions sorted top-to-bottom, then left-to-right."""
        return tuple(sorted(self.regions, key=lambda r: (r.y, r.x)))


@dataclass(frozen=True, eq=False)
class VideoArtifact:
    """One video's extracted artifacts: frame embeddings plus per-frame OCR text.

    Frames and texts are index-aligned: texts[i].frame_index == frames[i].frame_index.
    """

    video_id: str
    app_id: str
    bug_id: str
    frames: tuple[FrameEmbedding, ...]
    texts: tuple[FrameText, ...]
    sample_stride: int = 1  # raw-video frames between consecutive sampled frames

    def __post_init__(self) -> None:
        frames = tuple(self.frames)
        texts = tuple(self.texts)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "texts", texts)
        if not frames:
            raise ValueError(f"video {self.video_id}: must have at least one frame")
        if self.sample_stride < 1:
            raise ValueError(f"video {self.video_id}: sample_stride must be >= 1")
        dim = frames[0].dim
        for f in frames:
            if f.dim != dim:
                raise ValueError(
                    f"video {self.video_id}: frame {f.frame_index} has dim {f.dim}, expected {dim}"
                )
        indexes = [f.frame_index for f in frames]
        if indexes != sorted(set(indexes)):
            raise ValueError(f"video {self.video_id}: frame indexes must be strictly increasing")
        if len(texts) != len(frames) or any(
            t.frame_index != f.frame_index for t, f in zip(texts, frames)
        ):
            raise ValueError(
                f"video {self.video_id}: texts must align one-to-one with frames by frame_index"
            )

    @property
    def dim(self) -> int:
        return self.frames[0].dim

    def frame_matrix(self) -> np.ndarray:
        """Frame embeddings stacked into an (n_frames, dim) array."""
        return np.stack([f.vector for f in self.frames])


@dataclass(frozen=True, eq=False)
class TermVector:
    """Immutable sparse term -> weight map; zero weights are dropped on construction."""

    entries: Mapping[TermId, float]

    def __post_init__(self) -> None:
        clean: dict[TermId, float] = {}
        for term, weight in self.entries.items():
            w = float(weight)
            if not math.isfinite(w) or w < 0.0:
                raise ValueError(f"term {term!r}: weight must be finite and >= 0, got {weight}")
            if w != 0.0:
                clean[term] = w
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __contains__(self, term: TermId) -> bool:
        return term in self.entries

    def __iter__(self) -> Iterator[TermId]:
        # Without this, iteration would fall back to __getitem__(0), 1, ...
        # which never raises and so never terminates.
        return iter(self.entries)

    def __getitem__(self, term: TermId) -> float:
        return self.entries.get(term, 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TermVector):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def sorted_items(self) -> list[tuple[TermId, float]]:
        """Entries in ascending term order; fixes accumulation order everywhere."""
        return sorted(self.entries.items(), key=lambda kv: kv[0])

    def norm(self) -> float:
        total = 0.0
        for _, w in self.sorted_items():
            total += w * w
        return math.sqrt(total)

    def dot(self, other: "TermVector") -> float:
        if len(other) < len(self):
            small, big = other, self
        else:
            small, big = self, other
        total = 0.0
        for term, w in small.sorted_items():
            ow = big.entries.get(term)
            if ow is not None:
                total += w * ow
        return total


@dataclass(frozen=True, order=True)
class SimilarityScore:
    """A similarity value constrained to [0, 1]."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not math.isfinite(v) or not (0.0 <= v <= 1.0):
            raise ValueError(f"similarity must be a finite value in [0, 1], got {self.value}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


def _dense_cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"cosine requires matching dimensions, got {a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        # Exact 1.0 for identical inputs; the quotient below may fall short by an ulp.
        return 0.0 if not a.any() else 1.0
    na2 = float(np.dot(a, a))
    nb2 = float(np.dot(b, b))
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    # One sqrt of the product, not a product of sqrts: saves an ulp of rounding
    # (identical vectors divide to exactly 1.0). The product can leave the
    # double range for near-subnormal or huge norms; fall back to the stable
    # form there.
    prod = na2 * nb2
    if prod == 0.0 or math.isinf(prod):
        return float(np.dot(a, b)) / (math.sqrt(na2) * math.sqrt(nb2))
    return float(np.dot(a, b)) / math.sqrt(prod)


def _sparse_cosine(a: TermVector, b: TermVector) -> float:
    if not a or not b:
        return 0.0
    if a == b:
        return 1.0
    na2 = a.dot(a)
    nb2 = b.dot(b)
    if na2 == 0.0 or nb2 == 0.0:
        return 0.0
    prod = na2 * nb2
    if prod == 0.0 or math.isinf(prod):
        return a.dot(b) / (math.sqrt(na2) * math.sqrt(nb2))
    return a.dot(b) / math.sqrt(prod)


def cosine_similarity(
    a: Union[np.ndarray, Sequence[float], TermVector],
    b: Union[np.ndarray, Sequence[float], TermVector],
) -> float:
    """Cosine of the angle between two vectors, with the zero-vector convention.

    Accepts dense arrays or sparse TermVectors (both arguments of the same kind).
    Either vector being zero (or empty) yields 0.0; identical non-zero vectors
    yield exactly 1.0. The result is clipped to [-1, 1] to absorb rounding.
    """
    if isinstance(a, TermVector) != isinstance(b, TermVector):
        raise TypeError("cosine_similarity requires both vectors dense or both sparse")
    if isinstance(a, TermVector):
        value = _sparse_cosine(a, b)
    else:
        value = _dense_cosine(
            np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
        )
    return max(-1.0, min(1.0, value))


def clamped_cosine(
    a: Union[np.ndarray, Sequence[float], TermVector],
    b: Union[np.ndarray, Sequence[float], TermVector],
) -> SimilarityScore:
    """Cosine similarity with negatives clamped to zero."""
    return SimilarityScore(max(0.0, cosine_similarity(a, b)))
