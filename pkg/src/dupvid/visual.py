"""Visual retrieval: TF-IDF over bags of visual words, averaged over a
codebook ensemble.

IDF uses the smoothed form ln((N + 1) / (df + 1)) + 1 so that words absent
from the corpus still get a positive weight. The document corpus for a
codebook is the screenshot set the codebook was trained on: one image is one
document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .codebook import Codebook, assign_frames, build_bovw, load_codebook, save_codebook, train_kmeans
from .core import SimilarityScore, TermVector, VideoArtifact, cosine_similarity

__all__ = [
    "CorpusStats",
    "compute_corpus_stats",
    "stats_from_assignments",
    "idf_weight",
    "tfidf",
    "CodebookEnsemble",
    "train_ensemble",
    "member_vectors",
    "visual_similarity",
    "visual_similarity_from_vectors",
    "save_ensemble",
    "load_ensemble",
]


@dataclass(frozen=True, eq=False)
class CorpusStats:
    """Document counts backing IDF: how many corpus images contain each word."""

    doc_count: int
    doc_freq: Mapping[int, int]

    def __post_init__(self) -> None:
        if self.doc_count < 1:
            raise ValueError(f"doc_count must be >= 1, got {self.doc_count}")
        clean: dict[int, int] = {}
        for word, df in self.doc_freq.items():
            w, d = int(word), int(df)
            if not (1 <= d <= self.doc_count):
                raise ValueError(
                    f"word {w}: doc_freq must be in [1, {self.doc_count}], got {df}"
                )
            clean[w] = d
        object.__setattr__(self, "doc_freq", MappingProxyType(clean))


def compute_corpus_stats(docs: Sequence[TermVector]) -> CorpusStats:
    """Presence counts over a document collection."""
    if not docs:
        raise ValueError("corpus must contain at least one document")
    df: dict[int, int] = {}
    for doc in docs:
        for word, _ in doc.sorted_items():
            df[int(word)] = df.get(int(word), 0) + 1
    return CorpusStats(doc_count=len(docs), doc_freq=df)


def stats_from_assignments(words: np.ndarray, doc_count: int | None = None) -> CorpusStats:
    """Stats when each corpus image is a single embedding: one image, one word."""
    words = np.asarray(words, dtype=np.int64)
    counts = np.bincount(words)
    df = {int(w): int(c) for w, c in enumerate(counts) if c > 0}
    return CorpusStats(doc_count=doc_count or int(words.shape[0]), doc_freq=df)


def idf_weight(stats: CorpusStats, word: int) -> float:
    """Smoothed inverse document frequency; positive even for unseen words."""
    df = stats.doc_freq.get(int(word), 0)
    return math.log((stats.doc_count + 1) / (df + 1)) + 1.0


def tfidf(bag: TermVector, stats: CorpusStats) -> TermVector:
    """Reweight raw counts by IDF."""
    return TermVector(
        {word: tf * idf_weight(stats, int(word)) for word, tf in bag.sorted_items()}
    )


@dataclass(frozen=True, eq=False)
class CodebookEnsemble:
    """Codebooks trained on disjoint corpus subsets, each with its own stats."""

    members: tuple[tuple[Codebook, CorpusStats], ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ensemble must have at least one member")
        dim = members[0][0].dim
        for i, (cb, _) in enumerate(members):
            if cb.dim != dim:
                raise ValueError(f"member {i} has dim {cb.dim}, expected {dim}")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def dim(self) -> int:
        return self.members[0][0].dim


def train_ensemble(
    corpus_files: Sequence[tuple[str, np.ndarray]],
    k: int,
    ensemble_size: int,
    seed: int,
) -> CodebookEnsemble:
    """Train ``ensemble_size`` codebooks on disjoint subsets of the corpus.

    The file list is shuffled with the given seed and split into contiguous
    near-equal groups, so a member never shares screenshots with another.
    Member training seeds are derived from (seed, member index).
    """
    if ensemble_size < 1:
        raise ValueError(f"ensemble_size must be >= 1, got {ensemble_size}")
    if len(corpus_files) < ensemble_size:
        raise ValueError(
            f"need at least one corpus file per member: "
            f"{len(corpus_files)} files for {ensemble_size} members"
        )
    order = np.random.Generator(np.random.PCG64(seed)).permutation(len(corpus_files))
    shuffled = [corpus_files[int(i)] for i in order]

    base, extra = divmod(len(shuffled), ensemble_size)
    members: list[tuple[Codebook, CorpusStats]] = []
    start = 0
    for m in range(ensemble_size):
        size = base + (1 if m < extra else 0)
        group = shuffled[start : start + size]
        start += size
        points = np.concatenate([np.asarray(mat, dtype=np.float64) for _, mat in group])
        if points.shape[0] < k:
            names = ", ".join(name for name, _ in group)
            raise ValueError(
                f"member {m}: subset ({names}) has {points.shape[0]} images, fewer than k={k}"
            )
        member_seed = int(np.random.SeedSequence([seed, m]).generate_state(1)[0])
        cb = train_kmeans(points, k=k, seed=member_seed)
        stats = stats_from_assignments(assign_frames(points, cb))
        members.append((cb, stats))
    return CodebookEnsemble(members=tuple(members))


def member_vectors(video: VideoArtifact, ensemble: CodebookEnsemble) -> tuple[TermVector, ...]:
    """Per-member TF-IDF vector for one video."""
    return tuple(tfidf(build_bovw(video, cb), stats) for cb, stats in ensemble.members)


def visual_similarity_from_vectors(
    vecs_a: Sequence[TermVector], vecs_b: Sequence[TermVector]
) -> SimilarityScore:
    """Mean cosine over ensemble members, in member order."""
    if len(vecs_a) != len(vecs_b) or not vecs_a:
        raise ValueError("need matching non-empty member vector sequences")
    total = 0.0
    for va, vb in zip(vecs_a, vecs_b):
        total += max(0.0, cosine_similarity(va, vb))
    return SimilarityScore(total / len(vecs_a))


def visual_similarity(
    a: VideoArtifact, b: VideoArtifact, ensemble: CodebookEnsemble
) -> SimilarityScore:
    """Visual similarity of two videos under a codebook ensemble."""
    return visual_similarity_from_vectors(
        member_vectors(a, ensemble), member_vectors(b, ensemble)
    )


def _stats_to_obj(stats: CorpusStats) -> dict:
    return {
        "doc_count": stats.doc_count,
        "doc_freq": {str(w): df for w, df in sorted(stats.doc_freq.items())},
    }


def _stats_from_obj(obj: dict, path: Path) -> CorpusStats:
    try:
        return CorpusStats(
            doc_count=int(obj["doc_count"]),
            doc_freq={int(w): int(df) for w, df in obj["doc_freq"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: invalid corpus stats: {exc}") from exc


def save_ensemble(ensemble: CodebookEnsemble, out_dir: Path | str) -> None:
    """Write member_NN.dvcb plus member_NN.stats.json per member."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (cb, stats) in enumerate(ensemble.members):
        save_codebook(cb, out / f"member_{i:02d}.dvcb")
        with open(out / f"member_{i:02d}.stats.json", "w", encoding="utf-8") as fh:
            json.dump(_stats_to_obj(stats), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_ensemble(in_dir: Path | str) -> CodebookEnsemble:
    in_dir = Path(in_dir)
    paths = sorted(in_dir.glob("member_*.dvcb"))
    if not paths:
        raise ValueError(f"{in_dir}: no member_*.dvcb codebooks found")
    members: list[tuple[Codebook, CorpusStats]] = []
    for path in paths:
        stats_path = path.parent / (path.stem + ".stats.json")
        if not stats_path.exists():
            raise ValueError(f"{path}: missing companion stats file {stats_path.name}")
        cb = load_codebook(path)
        obj = json.loads(stats_path.read_text(encoding="utf-8"))
        members.append((cb, _stats_from_obj(obj, stats_path)))
    return CodebookEnsemble(members=tuple(members))
