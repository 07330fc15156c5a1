"""Duplicate-detection evaluation: task generation, score combination,
ranking, mRR/mAP, and paired significance testing.

A task asks: given a query video, rank a 13-video corpus that hides the
query's 2 duplicate videos, all 3 videos of one distractor bug, and one video
each of the 8 remaining bugs. Per app that yields 30 queries x 9 distractor
choices x 3 seeded corpus draws = 810 tasks, with every video queried exactly
27 times.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import SimilarityScore, VideoArtifact
from .ingest import DatasetManifest
from .sequential import SeqConfig, seq_similarity, textual_sequence, visual_sequence
from .textual import TextCorpusIndex, build_document, build_index, raw_textual_score
from .visual import CodebookEnsemble, member_vectors, visual_similarity_from_vectors

MODES = (
    "vis",
    "txt",
    "seq_vis",
    "seq_txt",
    "vis+txt",
    "vis+seq",
    "txt+seq",
    "vis+txt+seq",
)

__all__ = [
    "MODES",
    "DuplicateTask",
    "generate_tasks",
    "CombinationWeights",
    "needed_components",
    "combined_score",
    "Ranking",
    "rank_candidates",
    "rank_corpus",
    "TaskResult",
    "first_duplicate_rank",
    "average_precision",
    "mean_reciprocal_rank",
    "mean_average_precision",
    "wilcoxon_signed_rank",
    "PairScorer",
    "evaluate_app",
    "build_report",
]


@dataclass(frozen=True, eq=False)
class DuplicateTask:
    """One ranking problem: find the query's duplicates inside a 13-video corpus."""

    task_id: str
    app_id: str
    query: str
    corpus: tuple[str, ...]
    ground_truth: frozenset[str]

    def __post_init__(self) -> None:
        corpus = tuple(self.corpus)
        gt = frozenset(self.ground_truth)
        object.__setattr__(self, "corpus", corpus)
        object.__setattr__(self, "ground_truth", gt)
        if len(corpus) != 13 or len(set(corpus)) != 13:
            raise ValueError(f"task {self.task_id}: corpus must be 13 distinct videos")
        if len(gt) != 2 or not gt <= set(corpus):
            raise ValueError(f"task {self.task_id}: ground truth must be 2 corpus videos")
        if self.query in corpus:
            raise ValueError(f"task {self.task_id}: query must not appear in its corpus")


def _app_rng(seed: int, app_id: str) -> np.random.Generator:
    app_hash = int.from_bytes(hashlib.sha256(app_id.encode("utf-8")).digest()[:8], "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, app_hash])))


def generate_tasks(manifest: DatasetManifest, app_id: str, seed: int) -> list[DuplicateTask]:
    """All 810 tasks for one app, deterministically for a fixed seed.

    Requires exactly 10 bugs with 3 videos each. The corpus order is shuffled
    per task so the positional tie-break cannot favor any composition slot.
    """
    app = manifest.app(app_id)
    if len(app.bugs) != 10:
        raise ValueError(f"app {app_id!r} has {len(app.bugs)} bugs; task generation needs 10")
    for bug in app.bugs:
        if len(bug.videos) != 3:
            raise ValueError(
                f"bug {bug.bug_id!r} in app {app_id!r} has {len(bug.videos)} videos; "
                f"task generation needs 3"
            )

    rng = _app_rng(seed, app_id)
    tasks: list[DuplicateTask] = []
    for query_bug in app.bugs:
        for query_video in query_bug.videos:
            duplicates = [v.video_id for v in query_bug.videos if v.video_id != query_video.video_id]
            others = [b for b in app.bugs if b.bug_id != query_bug.bug_id]
            for distractor in others:
                remaining = [b for b in others if b.bug_id != distractor.bug_id]
                for draw in range(3):
                    singles = [
                        bug.videos[int(rng.integers(len(bug.videos)))].video_id
                        for bug in remaining
                    ]
                    corpus = duplicates + [v.video_id for v in distractor.videos] + singles
                    order = rng.permutation(len(corpus))
                    corpus = [corpus[int(i)] for i in order]
                    tasks.append(
                        DuplicateTask(
                            task_id=f"{app_id}:{query_video.video_id}:{distractor.bug_id}:{draw}",
                            app_id=app_id,
                            query=query_video.video_id,
                            corpus=tuple(corpus),
                            ground_truth=frozenset(duplicates),
                        )
                    )
    return tasks


@dataclass(frozen=True)
class CombinationWeights:
    """Mode selection plus the textual weight w used by the vis+txt combination."""

    mode: str
    w: float = 0.1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if not (0.0 <= self.w <= 1.0):
            raise ValueError(f"w must be in [0, 1], got {self.w}")


def needed_components(mode: str) -> frozenset[str]:
    """Which pairwise component scores a mode consumes."""
    table = {
        "vis": {"vis"},
        "txt": {"txt"},
        "seq_vis": {"seq_vis"},
        "seq_txt": {"seq_txt"},
        "vis+txt": {"vis", "txt"},
        "vis+seq": {"vis", "seq_vis"},
        "txt+seq": {"txt", "seq_txt"},
        "vis+txt+seq": {"vis", "txt", "seq_vis", "seq_txt"},
    }
    try:
        return frozenset(table[mode])
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}") from None


def combined_score(components: Mapping[str, float], weights: CombinationWeights) -> SimilarityScore:
    """Linear combination of per-pair component scores for the selected mode."""

    def get(name: str) -> float:
        try:
            return float(components[name])
        except KeyError:
            raise ValueError(f"mode {weights.mode!r} requires component {name!r}") from None

    mode = weights.mode
    if mode == "vis":
        value = get("vis")
    elif mode == "txt":
        value = get("txt")
    elif mode == "seq_vis":
        value = get("seq_vis")
    elif mode == "seq_txt":
        value = get("seq_txt")
    elif mode == "vis+txt":
        value = (1.0 - weights.w) * get("vis") + weights.w * get("txt")
    elif mode == "vis+seq":
        value = 0.5 * get("vis") + 0.5 * get("seq_vis")
    elif mode == "txt+seq":
        value = 0.5 * get("txt") + 0.5 * get("seq_txt")
    else:  # vis+txt+seq
        value = 0.6 * (0.5 * get("vis") + 0.5 * get("seq_vis")) + 0.4 * (
            0.5 * get("txt") + 0.5 * get("seq_txt")
        )
    return SimilarityScore(min(1.0, max(0.0, value)))


@dataclass(frozen=True, eq=False)
class Ranking:
    """Corpus videos ordered by descending score; ties keep corpus order."""

    task_id: str
    entries: tuple[tuple[str, float], ...]

    def rank_of(self, video_id: str) -> int:
        """1-based rank."""
        for pos, (vid, _) in enumerate(self.entries, start=1):
            if vid == video_id:
                return pos
        raise KeyError(f"video {video_id!r} not in ranking for task {self.task_id}")


def rank_candidates(
    task_id: str,
    query: str,
    corpus: Sequence[str],
    component_scorer: Callable[[str, str], Mapping[str, float]],
    weights: CombinationWeights,
) -> Ranking:
    """Score every corpus video against the query and sort.

    The scorer returns per-pair components; a raw textual score is passed as
    ``txt_raw`` and max-normalized over this corpus before combination.
    """
    rows: list[dict[str, float]] = []
    for vid in corpus:
        try:
            rows.append(dict(component_scorer(query, vid)))
        except Exception as exc:
            raise RuntimeError(
                f"task {task_id}: scoring pair ({query!r}, {vid!r}) failed: {exc}"
            ) from exc
    if any("txt_raw" in row for row in rows):
        peak = max(row.get("txt_raw", 0.0) for row in rows)
        for row in rows:
            raw = row.pop("txt_raw", 0.0)
            row["txt"] = 0.0 if peak <= 1e-12 else min(1.0, raw / peak)
    scores = [float(combined_score(row, weights)) for row in rows]
    order = sorted(range(len(corpus)), key=lambda pos: (-scores[pos], pos))
    return Ranking(
        task_id=task_id,
        entries=tuple((corpus[pos], scores[pos]) for pos in order),
    )


def rank_corpus(
    task: DuplicateTask,
    component_scorer: Callable[[str, str], Mapping[str, float]],
    weights: CombinationWeights,
) -> Ranking:
    return rank_candidates(task.task_id, task.query, task.corpus, component_scorer, weights)


@dataclass(frozen=True)
class TaskResult:
    """Per-task retrieval outcome."""

    task_id: str
    duplicate_ranks: tuple[int, ...]  # ranks of the ground-truth videos, ascending

    @property
    def first_rank(self) -> int:
        return self.duplicate_ranks[0]

    @property
    def reciprocal_rank(self) -> float:
        return 1.0 / self.first_rank

    @property
    def average_precision(self) -> float:
        total = 0.0
        for found, rank in enumerate(self.duplicate_ranks, start=1):
            total += found / rank
        return total / len(self.duplicate_ranks)


def result_for(task: DuplicateTask, ranking: Ranking) -> TaskResult:
    ranks = tuple(sorted(ranking.rank_of(vid) for vid in task.ground_truth))
    return TaskResult(task_id=task.task_id, duplicate_ranks=ranks)


def first_duplicate_rank(ranking: Ranking, ground_truth: frozenset[str]) -> int:
    return min(ranking.rank_of(vid) for vid in ground_truth)


def average_precision(ranking: Ranking, ground_truth: frozenset[str]) -> float:
    ranks = sorted(ranking.rank_of(vid) for vid in ground_truth)
    total = 0.0
    for found, rank in enumerate(ranks, start=1):
        total += found / rank
    return total / len(ranks)


def _sorted_results(results: Sequence[TaskResult]) -> list[TaskResult]:
    if not results:
        raise ValueError("need at least one task result")
    return sorted(results, key=lambda r: r.task_id)


def mean_reciprocal_rank(results: Sequence[TaskResult]) -> float:
    ordered = _sorted_results(results)
    total = 0.0
    for r in ordered:
        total += r.reciprocal_rank
    return total / len(ordered)


def mean_average_precision(results: Sequence[TaskResult]) -> float:
    ordered = _sorted_results(results)
    total = 0.0
    for r in ordered:
        total += r.average_precision
    return total / len(ordered)


def _average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties averaged."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # mean of 1-based positions i+1 .. j+1
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


def wilcoxon_signed_rank(
    a: Sequence[float], b: Sequence[float], exact_cutoff: int = 25
) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; tied absolute differences get average
    ranks. Returns (statistic, p_value) with statistic = min(W+, W-). Uses
    the exact permutation distribution for n <= exact_cutoff pairs and a
    normal approximation with continuity and tie corrections above. All
    differences zero gives p = 1 by convention.
    """
    if len(a) != len(b):
        raise ValueError(f"paired samples must have equal length, got {len(a)} and {len(b)}")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    diffs = [d for d in diffs if d != 0.0]
    n = len(diffs)
    if n == 0:
        return 0.0, 1.0

    abs_diffs = [abs(d) for d in diffs]
    ranks = _average_ranks(abs_diffs)
    w_plus = sum(r for d, r in zip(diffs, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(diffs, ranks) if d < 0)
    statistic = min(w_plus, w_minus)

    if n <= exact_cutoff:
        # Average ranks are half-integers; double them so the subset-sum DP
        # runs on exact integers.
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        counts = np.zeros(total + 1, dtype=np.int64)
        counts[0] = 1
        for d in doubled:  # every rank is >= 1, so d >= 2
            counts[d:] = counts[d:] + counts[:-d]
        w2 = int(round(2 * statistic))
        cum = int(counts[: w2 + 1].sum())
        p = min(1.0, 2.0 * cum / float(2**n))
        return statistic, p

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over groups of tied |d|
    groups: dict[float, int] = {}
    for v in abs_diffs:
        groups[v] = groups.get(v, 0) + 1
    var -= sum(t**3 - t for t in groups.values()) / 48.0
    z = (statistic - mean + 0.5) / math.sqrt(var)
    p = min(1.0, math.erfc(-z / math.sqrt(2.0)))
    return statistic, p


class PairScorer:
    """Per-app component scorer with precomputed representations and caches.

    Symmetric components (vis, seq_vis, seq_txt) are cached per unordered
    pair; the raw textual score is direction-sensitive and cached per ordered
    pair. Representations are immutable after construction so priming may run
    on worker threads.
    """

    def __init__(
        self,
        artifacts: Mapping[str, VideoArtifact],
        components: frozenset[str],
        ensemble: CodebookEnsemble | None = None,
        text_index: TextCorpusIndex | None = None,
        seq_cfg: SeqConfig = SeqConfig(),
    ) -> None:
        self.components = frozenset(components)
        self.seq_cfg = seq_cfg
        if "vis" in components and ensemble is None:
            raise ValueError("visual scoring requires a codebook ensemble")
        if ("txt" in components or "seq_txt" in components) and text_index is None:
            raise ValueError("textual scoring requires a text index")
        self.text_index = text_index
        self._vis = (
            {vid: member_vectors(art, ensemble) for vid, art in artifacts.items()}
            if "vis" in components
            else {}
        )
        self._seq_vis = (
            {vid: visual_sequence(art) for vid, art in artifacts.items()}
            if "seq_vis" in components
            else {}
        )
        self._seq_txt = (
            {vid: textual_sequence(art, text_index) for vid, art in artifacts.items()}
            if "seq_txt" in components
            else {}
        )
        self._sym_cache: dict[tuple[str, str], dict[str, float]] = {}
        self._txt_cache: dict[tuple[str, str], float] = {}

    def _sym_components(self, x: str, y: str) -> dict[str, float]:
        key = (x, y) if x <= y else (y, x)
        cached = self._sym_cache.get(key)
        if cached is None:
            cached = {}
            if "vis" in self.components:
                cached["vis"] = float(
                    visual_similarity_from_vectors(self._vis[key[0]], self._vis[key[1]])
                )
            if "seq_vis" in self.components:
                cached["seq_vis"] = float(
                    seq_similarity(self._seq_vis[key[0]], self._seq_vis[key[1]], self.seq_cfg)
                )
            if "seq_txt" in self.components:
                cached["seq_txt"] = float(
                    seq_similarity(self._seq_txt[key[0]], self._seq_txt[key[1]], self.seq_cfg)
                )
            self._sym_cache[key] = cached
        return cached

    def _txt_raw(self, query: str, cand: str) -> float:
        key = (query, cand)
        cached = self._txt_cache.get(key)
        if cached is None:
            index = self.text_index
            cached = raw_textual_score(index.document(query), index.document(cand), index)
            self._txt_cache[key] = cached
        return cached

    def __call__(self, query: str, cand: str) -> dict[str, float]:
        out = dict(self._sym_components(query, cand))
        if "txt" in self.components:
            out["txt_raw"] = self._txt_raw(query, cand)
        return out

    def prime(self, tasks: Sequence[DuplicateTask], jobs: int = 1) -> None:
        """Precompute every pair the tasks will need, optionally in parallel.

        Results land in dict caches keyed by pair, so the outcome does not
        depend on the degree of parallelism.
        """
        sym_pairs: set[tuple[str, str]] = set()
        txt_pairs: set[tuple[str, str]] = set()
        for task in tasks:
            for vid in task.corpus:
                key = (task.query, vid) if task.query <= vid else (vid, task.query)
                sym_pairs.add(key)
                txt_pairs.add((task.query, vid))
        sym_todo = sorted(sym_pairs - self._sym_cache.keys())
        if jobs > 1 and len(sym_todo) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for key, value in zip(
                    sym_todo, pool.map(lambda k: self._compute_sym(*k), sym_todo)
                ):
                    self._sym_cache[key] = value
        else:
            for key in sym_todo:
                self._sym_cache[key] = self._compute_sym(*key)
        if "txt" in self.components:
            for query, cand in sorted(txt_pairs):
                self._txt_raw(query, cand)

    def _compute_sym(self, x: str, y: str) -> dict[str, float]:
        out: dict[str, float] = {}
        if "vis" in self.components:
            out["vis"] = float(visual_similarity_from_vectors(self._vis[x], self._vis[y]))
        if "seq_vis" in self.components:
            out["seq_vis"] = float(seq_similarity(self._seq_vis[x], self._seq_vis[y], self.seq_cfg))
        if "seq_txt" in self.components:
            out["seq_txt"] = float(seq_similarity(self._seq_txt[x], self._seq_txt[y], self.seq_cfg))
        return out


def evaluate_app(
    artifacts: Mapping[str, VideoArtifact],
    tasks: Sequence[DuplicateTask],
    weights_by_mode: Sequence[CombinationWeights],
    ensemble: CodebookEnsemble | None,
    seq_cfg: SeqConfig,
    jobs: int = 1,
    doc_order: Sequence[str] | None = None,
) -> dict[str, list[TaskResult]]:
    """Run every task under every mode; returns results keyed by mode."""
    components = frozenset().union(*(needed_components(w.mode) for w in weights_by_mode))
    text_index = None
    if "txt" in components or "seq_txt" in components:
        order = list(doc_order) if doc_order is not None else sorted(artifacts)
        text_index = build_index([build_document(artifacts[vid]) for vid in order])
    scorer = PairScorer(
        artifacts,
        components,
        ensemble=ensemble,
        text_index=text_index,
        seq_cfg=seq_cfg,
    )
    scorer.prime(tasks, jobs=jobs)
    by_mode: dict[str, list[TaskResult]] = {}
    for weights in weights_by_mode:
        results = [result_for(task, rank_corpus(task, scorer, weights)) for task in tasks]
        by_mode[weights.mode] = results
    return by_mode


def _metric_block(results: Sequence[TaskResult]) -> dict:
    return {
        "mrr": mean_reciprocal_rank(results),
        "map": mean_average_precision(results),
        "task_count": len(results),
    }


def build_report(
    results_by_mode: Mapping[str, Mapping[str, list[TaskResult]]],
    weights_by_mode: Mapping[str, CombinationWeights],
    seed: int,
    seq_cfg: SeqConfig,
) -> dict:
    """Assemble the JSON-ready evaluation report.

    ``results_by_mode`` maps mode -> app_id -> task results. Output ordering
    is fixed (modes in MODES order, apps and tasks sorted) so serialized
    reports are byte-identical across runs.
    """
    modes = [m for m in MODES if m in results_by_mode]
    mode_blocks = []
    for mode in modes:
        per_app = results_by_mode[mode]
        all_results = [r for app in sorted(per_app) for r in per_app[app]]
        tasks_sorted = sorted(all_results, key=lambda r: r.task_id)
        mode_blocks.append(
            {
                "mode": mode,
                "w": weights_by_mode[mode].w if mode == "vis+txt" else None,
                "overall": _metric_block(all_results),
                "per_app": {app: _metric_block(per_app[app]) for app in sorted(per_app)},
                "tasks": [
                    {
                        "task_id": r.task_id,
                        "duplicate_ranks": list(r.duplicate_ranks),
                        "first_rank": r.first_rank,
                        "rr": r.reciprocal_rank,
                        "ap": r.average_precision,
                    }
                    for r in tasks_sorted
                ],
            }
        )

    significance = []
    for i, mode_a in enumerate(modes):
        for mode_b in modes[i + 1 :]:
            results_a = sorted(
                (r for app in results_by_mode[mode_a] for r in results_by_mode[mode_a][app]),
                key=lambda r: r.task_id,
            )
            results_b = sorted(
                (r for app in results_by_mode[mode_b] for r in results_by_mode[mode_b][app]),
                key=lambda r: r.task_id,
            )
            for metric, extract in (
                ("rr", lambda r: r.reciprocal_rank),
                ("ap", lambda r: r.average_precision),
            ):
                stat, p = wilcoxon_signed_rank(
                    [extract(r) for r in results_a], [extract(r) for r in results_b]
                )
                significance.append(
                    {
                        "metric": metric,
                        "mode_a": mode_a,
                        "mode_b": mode_b,
                        "statistic": stat,
                        "p_value": p,
                    }
                )

    apps = sorted({app for per_app in results_by_mode.values() for app in per_app})
    return {
        "schema": "dupvid-report-v1",
        "task_design": "per app: 30 queries x 9 distractor bugs x 3 corpus draws = 810 tasks",
        "seed": seed,
        "denominator_variant": seq_cfg.denominator_variant,
        "match_threshold": seq_cfg.match_threshold,
        "apps": apps,
        "task_count": sum(
            len(rs) for rs in next(iter(results_by_mode.values())).values()
        )
        if results_by_mode
        else 0,
        "modes": mode_blocks,
        "significance": significance,
    }
