"""Text preprocessing, document building, and VSM scoring."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dupvid.core import FrameEmbedding, FrameText, TermVector, TextRegion, VideoArtifact
from dupvid.textual import (
    TextDocument,
    build_document,
    build_index,
    frame_tfidf_vectors,
    idf,
    load_lemmas,
    load_stopwords,
    preprocess,
    raw_textual_score,
    textual_scores,
)


def doc(video_id, tokens):
    counts = {}
    for t in tokens:
        counts[t] = counts.get(t, 0.0) + 1.0
    return TextDocument(video_id=video_id, tokens=tuple(tokens), term_counts=TermVector(counts))


class TestPreprocess:
    def test_stopword_and_punctuation_handling(self):
        assert preprocess("The PDF, converted!!") == ["pdf", "converted"]

    def test_empty_string(self):
        assert preprocess("") == []

    def test_plural_lemmatized(self):
        assert preprocess("Files") == ["file"]

    def test_unknown_token_passes_through(self):
        # verb inflections are not in the lemma table
        assert preprocess("converted") == ["converted"]

    def test_punctuation_only(self):
        assert preprocess("!!! --- ...") == []

    def test_non_ascii_tokens_dropped(self):
        assert preprocess("Café user") == ["user"]

    def test_contractions_reduce_to_stopwords(self):
        assert preprocess("it's don't") == []

    def test_digits_kept(self):
        assert preprocess("Error 404") == ["error", "404"]

    def test_underscore_splits(self):
        assert preprocess("save_file_now") == ["save", "file"]

    @given(st.text(max_size=40))
    def test_output_tokens_are_normalized(self, raw):
        stopwords = load_stopwords()
        for token in preprocess(raw):
            assert token == token.lower()
            assert token.isascii()
            assert token not in stopwords
            assert token.isalnum()


class TestBundledTables:
    def test_stopwords_include_the(self):
        assert "the" in load_stopwords()

    def test_lemma_table_maps_files(self):
        table = load_lemmas()
        assert table["files"] == "file"
        assert "converted" not in table

    def test_lemma_values_are_clean(self):
        stopwords = load_stopwords()
        for inflected, lemma in load_lemmas().items():
            assert lemma.isascii() and lemma == lemma.lower()
            assert lemma not in stopwords
            assert inflected != lemma


def make_video(frame_texts, video_id="v"):
    frames = tuple(
        FrameEmbedding(i, np.ones(2)) for i in range(len(frame_texts))
    )
    texts = tuple(
        FrameText(i, tuple(TextRegion(x * 40, 0, 30, 10, s, 0.9) for x, s in enumerate(regions)))
        for i, regions in enumerate(frame_texts)
    )
    return VideoArtifact(video_id, "a", "b", frames, texts, 1)


class TestBuildDocument:
    def test_concatenates_and_counts(self):
        video = make_video([["Save"], ["Save", "Cancel"]])
        d = build_document(video)
        assert list(d.tokens) == ["save", "save", "cancel"]
        assert d.term_counts == TermVector({"save": 2.0, "cancel": 1.0})

    def test_empty_ocr_gives_empty_document(self):
        video = make_video([[], []])
        d = build_document(video)
        assert d.tokens == ()
        assert len(d.term_counts) == 0

    def test_frame_order_changes_tokens_not_counts(self):
        a = build_document(make_video([["Save"], ["Cancel"]], "a"))
        b = build_document(make_video([["Cancel"], ["Save"]], "b"))
        assert a.tokens != b.tokens
        assert a.term_counts == b.term_counts

    def test_reading_order_top_to_bottom_left_to_right(self):
        frames = (FrameEmbedding(0, np.ones(2)),)
        regions = (
            TextRegion(50, 80, 30, 10, "third", 0.9),
            TextRegion(90, 20, 30, 10, "second", 0.9),
            TextRegion(10, 20, 30, 10, "first", 0.9),
        )
        video = VideoArtifact("v", "a", "b", frames, (FrameText(0, regions),), 1)
        assert list(build_document(video).tokens) == ["first", "second", "third"]


class TestIdf:
    def test_formula(self):
        index = build_index([doc("a", ["alpha"]), doc("b", ["alpha"]), doc("c", ["beta"])])
        assert idf(index, "alpha") == 1.0 + math.log(3 / 3)
        assert idf(index, "beta") == 1.0 + math.log(3 / 2)
        assert idf(index, "missing") == 1.0 + math.log(3 / 1)

    @given(st.integers(1, 500), st.integers(0, 500))
    def test_always_positive(self, n, df):
        df = min(df, n)  # df cannot exceed the document count
        assert 1.0 + math.log(n / (df + 1)) > 0.0


class TestRawScore:
    def test_no_shared_terms_is_zero(self):
        index = build_index([doc("q", ["alpha"]), doc("d", ["beta"])])
        assert raw_textual_score(index.document("q"), index.document("d"), index) == 0.0

    def test_empty_query_and_doc(self):
        index = build_index([doc("q", []), doc("d", [])])
        assert raw_textual_score(index.document("q"), index.document("d"), index) == 0.0

    def test_length_normalization_ordering(self):
        # q = {alpha}; d1 = {alpha}; d2 = {alpha, beta x3}: d1 must outrank d2
        index = build_index(
            [
                doc("q", ["alpha"]),
                doc("d1", ["alpha"]),
                doc("d2", ["alpha", "beta", "beta", "beta"]),
            ]
        )
        q = index.document("q")
        r1 = raw_textual_score(q, index.document("d1"), index)
        r2 = raw_textual_score(q, index.document("d2"), index)
        assert r1 > r2 > 0.0

    def test_hand_worked_value(self):
        # Index: q={alpha}, d={alpha, alpha, beta}. N=2, df(alpha)=2.
        # idf(alpha) = 1 + ln(2/3); shared = {alpha}; tf_d = 2; |d| = 3;
        # coord = 1/1. raw = sqrt(2) * idf^2 / sqrt(3).
        index = build_index([doc("q", ["alpha"]), doc("d", ["alpha", "alpha", "beta"])])
        w = 1.0 + math.log(2 / 3)
        expected = math.sqrt(2.0) * w * w * 1.0 / math.sqrt(3.0)
        got = raw_textual_score(index.document("q"), index.document("d"), index)
        assert got == pytest.approx(expected, abs=1e-15)

    def test_coordination_rewards_coverage(self):
        # Same doc scored by a 2-term query matching 1 vs 2 of its terms.
        index = build_index(
            [
                doc("q1", ["alpha", "gamma"]),
                doc("q2", ["alpha", "beta"]),
                doc("d", ["alpha", "beta"]),
            ]
        )
        d = index.document("d")
        partial = raw_textual_score(index.document("q1"), d, index)
        full = raw_textual_score(index.document("q2"), d, index)
        assert full > partial > 0.0

    @settings(max_examples=60)
    @given(
        st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=8),
        st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=8),
        st.sampled_from("xyz"),
    )
    def test_irrelevant_term_never_raises_score(self, q_toks, d_toks, extra):
        q_tokens = ["tok_" + c for c in q_toks]
        d_tokens = ["tok_" + c for c in d_toks]
        extra_token = "irr_" + extra  # never overlaps the query
        index_before = build_index([doc("q", q_tokens), doc("d", d_tokens)])
        index_after = build_index([doc("q", q_tokens), doc("d", d_tokens + [extra_token])])
        before = raw_textual_score(
            index_before.document("q"), index_before.document("d"), index_before
        )
        after = raw_textual_score(
            index_after.document("q"), index_after.document("d"), index_after
        )
        assert after <= before + 1e-15
        if before > 0:
            assert after < before


class TestTextualScores:
    def test_self_is_max(self):
        index = build_index([doc("q", ["alpha", "beta"]), doc("d", ["alpha"])])
        scores = textual_scores("q", ["q", "d"], index)
        assert float(scores[0]) == 1.0
        assert 0.0 < float(scores[1]) < 1.0

    def test_all_zero_when_nothing_shared(self):
        index = build_index([doc("q", ["alpha"]), doc("d1", ["beta"]), doc("d2", ["gamma"])])
        scores = textual_scores("q", ["d1", "d2"], index)
        assert [float(s) for s in scores] == [0.0, 0.0]

    def test_exactly_one_max_for_distinct_docs(self):
        index = build_index(
            [
                doc("q", ["alpha", "beta"]),
                doc("d1", ["alpha"]),
                doc("d2", ["alpha", "beta"]),
                doc("d3", ["gamma"]),
            ]
        )
        scores = [float(s) for s in textual_scores("q", ["d1", "d2", "d3"], index)]
        assert scores.count(1.0) == 1
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_unknown_video_rejected(self):
        index = build_index([doc("q", ["alpha"])])
        with pytest.raises(KeyError, match="ghost"):
            textual_scores("ghost", ["q"], index)


class TestFrameVectors:
    def test_weights_are_tf_times_idf(self):
        video = make_video([["save save cancel"], []], "v")
        other = make_video([["cancel"]], "w")
        index = build_index([build_document(video), build_document(other)])
        vecs = frame_tfidf_vectors(video, index)
        assert len(vecs) == 2
        assert vecs[0]["save"] == 2.0 * idf(index, "save")
        assert vecs[0]["cancel"] == 1.0 * idf(index, "cancel")
        assert len(vecs[1]) == 0

    def test_empty_frames_give_empty_vectors(self):
        video = make_video([[], []])
        index = build_index([build_document(video)])
        assert all(len(v) == 0 for v in frame_tfidf_vectors(video, index))


class TestIndex:
    def test_duplicate_video_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_index([doc("v", ["alpha"]), doc("v", ["beta"])])

    def test_df_counts_presence_not_occurrences(self):
        index = build_index([doc("a", ["x", "x", "x"]), doc("b", ["x"])])
        assert index.doc_freq["x"] == 2

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            build_index([])
