"""Textual retrieval: per-video documents from OCR text, scored with a
vector-space model.

The raw score of a candidate document d against a query q is

    raw(q, d) = coord * (1 / sqrt(|d|)) * sum_{t in q&d} sqrt(tf_d(t)) * idf(t)^2

with idf(t) = 1 + ln(N / (df(t) + 1)) and coord = |q&d| / |distinct q terms|.
Raw scores are unbounded, so rankings normalize them to [0, 1] by dividing by
the maximum raw score within the corpus being ranked (max-normalization).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .core import SimilarityScore, TermVector, VideoArtifact

__all__ = [
    "load_stopwords",
    "load_lemmas",
    "preprocess",
    "TextDocument",
    "build_document",
    "TextCorpusIndex",
    "build_index",
    "idf",
    "raw_textual_score",
    "textual_scores",
    "frame_tfidf_vectors",
]


def _data_lines(name: str) -> Iterable[str]:
    text = resources.files("dupvid").joinpath(f"data/{name}").read_text(encoding="utf-8")
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            yield line


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset[str]:
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=1)
def load_lemmas() -> Mapping[str, str]:
    table: dict[str, str] = {}
    for line in _data_lines("lemmas.txt"):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"lemmas.txt: expected '<inflected> <lemma>', got {line!r}")
        inflected, lemma = parts
        if inflected in table:
            raise ValueError(f"lemmas.txt: duplicate entry for {inflected!r}")
        table[inflected] = lemma
    return MappingProxyType(table)


def _tokenize(raw: str) -> list[str]:
    """Split on non-alphanumeric boundaries."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in raw:
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def preprocess(
    raw: str,
    stopwords: frozenset[str] | None = None,
    lemmas: Mapping[str, str] | None = None,
) -> list[str]:
    """Normalize raw OCR text into retrieval tokens.

    Split on non-alphanumeric boundaries, lowercase, drop tokens with
    non-ASCII characters, drop stopwords, and lemmatize via the bundled
    lookup table (unknown tokens pass through unchanged).
    """
    if stopwords is None:
        stopwords = load_stopwords()
    if lemmas is None:
        lemmas = load_lemmas()
    out: list[str] = []
    for token in _tokenize(raw):
        token = token.lower()
        if not token.isascii():
            continue
        if token in stopwords:
            continue
        out.append(sys.intern(lemmas.get(token, token)))
    return out


@dataclass(frozen=True, eq=False)
class TextDocument:
    """All of one video's text, concatenated in frame and reading order."""

    video_id: str
    tokens: tuple[str, ...]
    term_counts: TermVector

    @property
    def length(self) -> int:
        """Token count with multiplicity."""
        return len(self.tokens)

    def distinct_terms(self) -> frozenset[str]:
        return frozenset(self.term_counts.entries.keys())


def _document_from_tokens(video_id: str, tokens: Sequence[str]) -> TextDocument:
    counts: dict[str, float] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0.0) + 1.0
    return TextDocument(video_id=video_id, tokens=tuple(tokens), term_counts=TermVector(counts))


def build_document(video: VideoArtifact) -> TextDocument:
    """Concatenate OCR text over frames (regions in reading order), then preprocess."""
    tokens: list[str] = []
    for frame_text in video.texts:
        for region in frame_text.reading_order():
            tokens.extend(preprocess(region.text))
    return _document_from_tokens(video.video_id, tokens)


@dataclass(frozen=True, eq=False)
class TextCorpusIndex:
    """Immutable document collection with document frequencies."""

    documents: Mapping[str, TextDocument]
    doc_freq: Mapping[str, int]
    doc_count: int

    def document(self, video_id: str) -> TextDocument:
        try:
            return self.documents[video_id]
        except KeyError:
            raise KeyError(f"video {video_id!r} is not in the text index") from None


def build_index(documents: Sequence[TextDocument]) -> TextCorpusIndex:
    """Index a document collection; deterministic for a fixed document order."""
    if not documents:
        raise ValueError("text index needs at least one document")
    by_id: dict[str, TextDocument] = {}
    df: dict[str, int] = {}
    for doc in documents:
        if doc.video_id in by_id:
            raise ValueError(f"duplicate document for video {doc.video_id!r}")
        by_id[doc.video_id] = doc
        for term in sorted(doc.distinct_terms()):
            df[term] = df.get(term, 0) + 1
    return TextCorpusIndex(
        documents=MappingProxyType(by_id),
        doc_freq=MappingProxyType(df),
        doc_count=len(documents),
    )


def idf(index: TextCorpusIndex, term: str) -> float:
    """Smoothed IDF, strictly positive for df <= N."""
    return 1.0 + math.log(index.doc_count / (index.doc_freq.get(term, 0) + 1))


def raw_textual_score(query: TextDocument, doc: TextDocument, index: TextCorpusIndex) -> float:
    """Unnormalized VSM score; 0.0 when the documents share no terms."""
    q_terms = query.distinct_terms()
    if not q_terms or doc.length == 0:
        return 0.0
    shared = sorted(q_terms & doc.distinct_terms())
    if not shared:
        return 0.0
    total = 0.0
    for term in shared:
        w = idf(index, term)
        total += math.sqrt(doc.term_counts[term]) * w * w
    coord = len(shared) / len(q_terms)
    return total * coord / math.sqrt(doc.length)


def textual_scores(
    query_id: str, corpus_ids: Sequence[str], index: TextCorpusIndex
) -> list[SimilarityScore]:
    """S_txt for every corpus document: raw scores max-normalized over the corpus."""
    query = index.document(query_id)
    raws = [raw_textual_score(query, index.document(vid), index) for vid in corpus_ids]
    peak = max(raws, default=0.0)
    if peak <= 1e-12:
        return [SimilarityScore(0.0) for _ in raws]
    return [SimilarityScore(min(1.0, r / peak)) for r in raws]


def frame_tfidf_vectors(video: VideoArtifact, index: TextCorpusIndex) -> tuple[TermVector, ...]:
    """Per-frame TF-IDF vectors for the textual sequential channel.

    Weights are tf * idf against the video-level index; frames with no text
    yield empty vectors.
    """
    vectors: list[TermVector] = []
    for frame_text in video.texts:
        counts: dict[str, float] = {}
        for region in frame_text.reading_order():
            for token in preprocess(region.text):
                counts[token] = counts.get(token, 0.0) + 1.0
        vectors.append(
            TermVector({t: tf * idf(index, t) for t, tf in sorted(counts.items())})
        )
    return tuple(vectors)
