"""TF-IDF weighting over visual words and ensemble-averaged similarity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dupvid.codebook import Codebook
from dupvid.core import FrameEmbedding, FrameText, TermVector, VideoArtifact
from dupvid.visual import (
    CodebookEnsemble,
    CorpusStats,
    compute_corpus_stats,
    idf_weight,
    load_ensemble,
    member_vectors,
    save_ensemble,
    stats_from_assignments,
    tfidf,
    train_ensemble,
    visual_similarity,
    visual_similarity_from_vectors,
)


class TestCorpusStats:
    def test_presence_counting(self):
        docs = [
            TermVector({1: 1.0}),
            TermVector({1: 2.0, 2: 1.0}),
            TermVector({3: 5.0}),
        ]
        stats = compute_corpus_stats(docs)
        assert stats.doc_count == 3
        assert dict(stats.doc_freq) == {1: 2, 2: 1, 3: 1}

    def test_from_assignments(self):
        stats = stats_from_assignments(np.array([0, 0, 2, 1, 2, 2]))
        assert stats.doc_count == 6
        assert dict(stats.doc_freq) == {0: 2, 1: 1, 2: 3}

    def test_df_cannot_exceed_doc_count(self):
        with pytest.raises(ValueError, match="doc_freq"):
            CorpusStats(doc_count=2, doc_freq={1: 3})

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            compute_corpus_stats([])


class TestTfidf:
    def test_hand_worked_weight(self):
        # tf = 2, df = 1 of N = 3: weight = 2 * (ln(4/2) + 1) = 2 * (ln 2 + 1)
        stats = CorpusStats(doc_count=3, doc_freq={7: 1})
        vec = tfidf(TermVector({7: 2.0}), stats)
        assert vec[7] == 2.0 * (math.log(2.0) + 1.0)

    def test_word_in_every_doc_keeps_raw_tf(self):
        # df = N means idf = ln(1) + 1 = 1
        stats = CorpusStats(doc_count=5, doc_freq={3: 5})
        assert tfidf(TermVector({3: 4.0}), stats)[3] == 4.0

    def test_unseen_word_gets_positive_weight(self):
        stats = CorpusStats(doc_count=9, doc_freq={0: 1})
        assert idf_weight(stats, 999) == math.log(10.0) + 1.0
        vec = tfidf(TermVector({999: 1.0}), stats)
        assert vec[999] > 0.0

    def test_idf_always_positive(self):
        stats = CorpusStats(doc_count=1, doc_freq={0: 1})
        assert idf_weight(stats, 0) == 1.0  # ln(2/2) + 1

    def test_empty_bag_stays_empty(self):
        stats = CorpusStats(doc_count=2, doc_freq={0: 1})
        assert len(tfidf(TermVector({}), stats)) == 0

    @given(
        st.dictionaries(st.integers(0, 30), st.integers(1, 9), min_size=1, max_size=8),
        st.integers(1, 20),
    )
    def test_weights_scale_with_tf(self, bag_counts, extra_docs):
        docs = [TermVector({w: 1.0}) for w in bag_counts] + [
            TermVector({1000 + i: 1.0}) for i in range(extra_docs)
        ]
        stats = compute_corpus_stats(docs)
        bag = TermVector({w: float(c) for w, c in bag_counts.items()})
        vec = tfidf(bag, stats)
        for w, c in bag_counts.items():
            assert vec[w] == pytest.approx(c * idf_weight(stats, w), abs=1e-12)


def make_video(vectors, video_id="v"):
    frames = tuple(FrameEmbedding(i, np.asarray(v, float)) for i, v in enumerate(vectors))
    texts = tuple(FrameText(i, ()) for i in range(len(vectors)))
    return VideoArtifact(video_id, "a", "b", frames, texts, 1)


def toy_ensemble():
    # Two 1-D members with word boundaries at 5 and 50
    stats = CorpusStats(doc_count=4, doc_freq={0: 2, 1: 2})
    cb1 = Codebook(centroids=np.array([[0.0], [10.0]]), training_seed=0)
    cb2 = Codebook(centroids=np.array([[0.0], [100.0]]), training_seed=1)
    return CodebookEnsemble(members=((cb1, stats), (cb2, stats)))


class TestVisualSimilarity:
    def test_identical_video_scores_one(self):
        ens = toy_ensemble()
        v = make_video([[0.1], [9.8], [10.2]])
        assert float(visual_similarity(v, v, ens)) == 1.0

    def test_disjoint_words_score_zero(self):
        ens = toy_ensemble()
        a = make_video([[0.0], [1.0]], "a")  # word 0 everywhere
        b = make_video([[120.0], [130.0]], "b")  # word 1 everywhere
        assert float(visual_similarity(a, b, ens)) == 0.0

    def test_mean_over_members(self):
        vecs_a = (TermVector({0: 1.0}), TermVector({0: 1.0}))
        vecs_b = (TermVector({0: 1.0}), TermVector({1: 1.0}))
        assert float(visual_similarity_from_vectors(vecs_a, vecs_b)) == 0.5

    def test_symmetry(self):
        ens = toy_ensemble()
        rng = np.random.default_rng(7)
        a = make_video(rng.uniform(0, 120, size=(5, 1)), "a")
        b = make_video(rng.uniform(0, 120, size=(4, 1)), "b")
        assert float(visual_similarity(a, b, ens)) == float(visual_similarity(b, a, ens))

    def test_member_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="member"):
            visual_similarity_from_vectors((TermVector({0: 1.0}),), ())


def toy_corpus_files(n_files=8, rows=5, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    return [
        (f"part_{i:02d}", rng.normal(size=(rows, dim)).astype(np.float32))
        for i in range(n_files)
    ]


class TestTrainEnsemble:
    def test_members_cover_disjoint_subsets(self):
        files = toy_corpus_files()
        ens = train_ensemble(files, k=3, ensemble_size=4, seed=5)
        assert ens.size == 4
        # 8 files x 5 rows split 4 ways: each member sees 10 images
        assert [stats.doc_count for _, stats in ens.members] == [10, 10, 10, 10]

    def test_deterministic(self):
        files = toy_corpus_files()
        a = train_ensemble(files, k=3, ensemble_size=4, seed=5)
        b = train_ensemble(files, k=3, ensemble_size=4, seed=5)
        for (cb_a, st_a), (cb_b, st_b) in zip(a.members, b.members):
            assert np.array_equal(cb_a.centroids, cb_b.centroids)
            assert dict(st_a.doc_freq) == dict(st_b.doc_freq)

    def test_members_differ(self):
        files = toy_corpus_files()
        ens = train_ensemble(files, k=3, ensemble_size=4, seed=5)
        c0 = ens.members[0][0].centroids
        c1 = ens.members[1][0].centroids
        assert not np.array_equal(c0, c1)

    def test_too_few_files_rejected(self):
        files = toy_corpus_files(n_files=3)
        with pytest.raises(ValueError, match="corpus file"):
            train_ensemble(files, k=2, ensemble_size=4, seed=0)

    def test_subset_smaller_than_k_rejected(self):
        files = toy_corpus_files(n_files=4, rows=2)
        with pytest.raises(ValueError, match="fewer than k"):
            train_ensemble(files, k=5, ensemble_size=4, seed=0)


class TestEnsemblePersistence:
    def test_roundtrip(self, tmp_path):
        files = toy_corpus_files()
        ens = train_ensemble(files, k=3, ensemble_size=2, seed=9)
        save_ensemble(ens, tmp_path)
        back = load_ensemble(tmp_path)
        assert back.size == 2
        for (cb_a, st_a), (cb_b, st_b) in zip(ens.members, back.members):
            assert np.allclose(cb_a.centroids, cb_b.centroids, atol=1e-6)
            assert st_a.doc_count == st_b.doc_count
            assert dict(st_a.doc_freq) == dict(st_b.doc_freq)

    def test_similarity_stable_across_roundtrip(self, tmp_path):
        files = toy_corpus_files(dim=3)
        ens = train_ensemble(files, k=3, ensemble_size=2, seed=9)
        save_ensemble(ens, tmp_path)
        back = load_ensemble(tmp_path)
        rng = np.random.default_rng(11)
        a = make_video(rng.normal(size=(4, 3)), "a")
        b = make_video(rng.normal(size=(6, 3)), "b")
        before = float(visual_similarity(a, b, ens))
        after = float(visual_similarity(a, b, back))
        assert before == pytest.approx(after, abs=1e-6)

    def test_missing_stats_rejected(self, tmp_path):
        files = toy_corpus_files()
        ens = train_ensemble(files, k=2, ensemble_size=2, seed=1)
        save_ensemble(ens, tmp_path)
        (tmp_path / "member_01.stats.json").unlink()
        with pytest.raises(ValueError, match="stats"):
            load_ensemble(tmp_path)

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no member"):
            load_ensemble(tmp_path)
