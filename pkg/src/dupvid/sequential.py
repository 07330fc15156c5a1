"""Order-aware similarity: a weighted soft longest-common-substring over
per-frame representations.

The DP is M[i][j] = sigma(i,j) * (i/m) * (j/n) + M[i-1][j-1] when
sigma(i,j) > tau, else 0, with sigma the clamped cosine of frame i of A and
frame j of B (1-based indices). Later frames weigh more. S_seq divides the
DP maximum by a normalizer over the two lengths and clamps to 1; the
``literal`` normalizer sums (i/min) * ((max-i)/max), the ``end_aligned``
variant sums (i/min) * ((max-min+i)/max).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import SimilarityScore, TermVector, VideoArtifact, clamped_cosine
from .textual import TextCorpusIndex, frame_tfidf_vectors

_EPS = 1e-12

__all__ = [
    "FrameSequence",
    "SeqConfig",
    "visual_sequence",
    "textual_sequence",
    "weighted_lcs",
    "max_wlcs",
    "seq_similarity",
]


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """A video reduced to an ordered list of per-frame vectors.

    All reps must be of one kind: dense arrays (visual) or TermVectors
    (textual). Dense reps must share a dimension.
    """

    video_id: str
    reps: tuple[Union[np.ndarray, TermVector], ...]

    def __post_init__(self) -> None:
        reps = tuple(self.reps)
        object.__setattr__(self, "reps", reps)
        if not reps:
            raise ValueError(f"video {self.video_id!r}: frame sequence must be non-empty")
        sparse = isinstance(reps[0], TermVector)
        for r in reps:
            if isinstance(r, TermVector) != sparse:
                raise TypeError(
                    f"video {self.video_id!r}: mixed dense and sparse frame representations"
                )
        if not sparse:
            dims = {np.asarray(r).shape for r in reps}
            if len(dims) != 1 or len(next(iter(dims))) != 1:
                raise ValueError(
                    f"video {self.video_id!r}: dense reps must be 1-D with one dimension, got {dims}"
                )

    def __len__(self) -> int:
        return len(self.reps)

    @property
    def is_sparse(self) -> bool:
        return isinstance(self.reps[0], TermVector)


@dataclass(frozen=True)
class SeqConfig:
    """Knobs for the sequential channel."""

    denominator_variant: str = "literal"  # or "end_aligned"
    match_threshold: float = 0.0  # tau: sigma must exceed this to extend a run

    def __post_init__(self) -> None:
        if self.denominator_variant not in ("literal", "end_aligned"):
            raise ValueError(
                f"denominator_variant must be 'literal' or 'end_aligned', "
                f"got {self.denominator_variant!r}"
            )
        if not (0.0 <= self.match_threshold <= 1.0):
            raise ValueError(f"match_threshold must be in [0, 1], got {self.match_threshold}")


def visual_sequence(video: VideoArtifact) -> FrameSequence:
    """Raw frame embeddings, in frame order."""
    return FrameSequence(video.video_id, tuple(f.vector for f in video.frames))


def textual_sequence(video: VideoArtifact, index: TextCorpusIndex) -> FrameSequence:
    """Per-frame text TF-IDF vectors, in frame order."""
    return FrameSequence(video.video_id, frame_tfidf_vectors(video, index))


def _dense_sigma(a: FrameSequence, b: FrameSequence) -> np.ndarray:
    mat_a = np.stack([np.asarray(r, dtype=np.float64) for r in a.reps])
    mat_b = np.stack([np.asarray(r, dtype=np.float64) for r in b.reps])
    if mat_a.shape[1] != mat_b.shape[1]:
        raise ValueError(
            f"videos {a.video_id!r} and {b.video_id!r} have mismatched frame dims "
            f"{mat_a.shape[1]} vs {mat_b.shape[1]}"
        )
    norm_a = np.sqrt(np.einsum("ij,ij->i", mat_a, mat_a))
    norm_b = np.sqrt(np.einsum("ij,ij->i", mat_b, mat_b))
    unit_a = np.divide(mat_a, norm_a[:, None], out=np.zeros_like(mat_a), where=norm_a[:, None] > 0)
    unit_b = np.divide(mat_b, norm_b[:, None], out=np.zeros_like(mat_b), where=norm_b[:, None] > 0)
    sigma = np.clip(unit_a @ unit_b.T, 0.0, 1.0)
    # Bit-identical frames must score exactly 1.0 (the matmul can fall an ulp
    # short), so identical-video self-similarity is exact.
    rows_b: dict[bytes, list[int]] = {}
    for j in range(mat_b.shape[0]):
        if norm_b[j] > 0:
            rows_b.setdefault(mat_b[j].tobytes(), []).append(j)
    for i in range(mat_a.shape[0]):
        if norm_a[i] > 0:
            for j in rows_b.get(mat_a[i].tobytes(), ()):
                sigma[i, j] = 1.0
    return sigma


def _sparse_sigma(a: FrameSequence, b: FrameSequence) -> np.ndarray:
    sigma = np.zeros((len(a), len(b)))
    for i, ra in enumerate(a.reps):
        for j, rb in enumerate(b.reps):
            sigma[i, j] = float(clamped_cosine(ra, rb))
    return sigma


def _sigma_matrix(a: FrameSequence, b: FrameSequence) -> np.ndarray:
    if a.is_sparse != b.is_sparse:
        raise TypeError(
            f"videos {a.video_id!r} and {b.video_id!r} use different sequence modalities"
        )
    return _sparse_sigma(a, b) if a.is_sparse else _dense_sigma(a, b)


def weighted_lcs(a: FrameSequence, b: FrameSequence, threshold: float = 0.0) -> float:
    """Maximum weighted common-substring overlap between two sequences."""
    sigma = _sigma_matrix(a, b)
    m, n = sigma.shape
    weights = np.outer(np.arange(1, m + 1) / m, np.arange(1, n + 1) / n)
    contrib = sigma * weights
    best = 0.0
    prev = np.zeros(n)
    shifted = np.empty(n)
    for i in range(m):
        shifted[0] = 0.0
        shifted[1:] = prev[:-1]
        cur = np.where(sigma[i] > threshold, contrib[i] + shifted, 0.0)
        row_best = float(cur.max())
        if row_best > best:
            best = row_best
        prev = cur.copy()
    return best


def max_wlcs(min_len: int, max_len: int, cfg: SeqConfig = SeqConfig()) -> float:
    """Normalizer for S_seq; see the module docstring for both variants."""
    if not (1 <= min_len <= max_len):
        raise ValueError(f"need 1 <= min <= max, got min={min_len}, max={max_len}")
    total = 0.0
    if cfg.denominator_variant == "literal":
        for i in range(1, min_len + 1):
            total += (i / min_len) * ((max_len - i) / max_len)
    else:
        for i in range(1, min_len + 1):
            total += (i / min_len) * ((max_len - min_len + i) / max_len)
    return total


def seq_similarity(a: FrameSequence, b: FrameSequence, cfg: SeqConfig = SeqConfig()) -> SimilarityScore:
    """S_seq = min(1, w-LCS / max_wlcs), or 0 when the normalizer vanishes."""
    denom = max_wlcs(min(len(a), len(b)), max(len(a), len(b)), cfg)
    if denom <= _EPS:
        return SimilarityScore(0.0)
    value = weighted_lcs(a, b, cfg.match_threshold) / denom
    return SimilarityScore(min(1.0, value))
