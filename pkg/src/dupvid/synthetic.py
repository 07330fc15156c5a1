"""Deterministic synthetic dataset generator for end-to-end benchmarks.

Real duplicate-detection corpora need humans recording app bugs, which makes
them impossible to check into a repository. This module fabricates a small
stand-in with the same structure: each bug owns a handful of well-separated
"screen" embedding clusters and a bag of on-screen words; its three
recordings replay one canonical frame script with small Gaussian noise on
the embeddings and a 90% token overlap in the OCR text. Videos of different
bugs land on different clusters and mostly disjoint vocabulary, so a
working retrieval pipeline should rank duplicates near the top.

Everything is drawn from one seeded generator in a fixed order, so two runs
with the same config produce byte-identical artifact files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FrameText, TextRegion
from .ingest import write_embedding_file, write_manifest, write_ocr_file

__all__ = ["SyntheticConfig", "generate_dataset"]

# Building blocks for pronounceable fake UI words. Purely cosmetic; the
# pipeline only cares that tokens are lowercase ASCII and collide rarely.
_SYLLABLES = (
    "ba", "den", "fi", "gor", "ha", "jin", "ka", "lem",
    "mo", "nur", "pa", "rin", "sa", "tel", "vu", "zor",
)

_SCREEN_W = 1080
_SCREEN_H = 1920


@dataclass(frozen=True)
class SyntheticConfig:
    """Shape and noise knobs for a generated dataset."""

    app_count: int = 3
    bugs_per_app: int = 10
    videos_per_bug: int = 3
    dim: int = 64
    screens_per_bug: int = 4
    signal_norm: float = 10.0
    noise_scale: float = 0.01  # embedding noise sigma, as a fraction of signal_norm
    shared_token_rate: float = 0.9  # chance a duplicate keeps each of the bug's words
    min_frames: int = 8
    max_frames: int = 16
    sample_stride: int = 6
    vocab_per_app: int = 120
    tokens_per_bug: int = 20
    codebook_files: int = 64
    codebook_rows_per_file: int = 32
    codebook_noise_row_rate: float = 0.1
    seed: int = 7

    def __post_init__(self) -> None:
        if self.min_frames < self.screens_per_bug:
            raise ValueError(
                f"min_frames ({self.min_frames}) must cover one frame per screen "
                f"({self.screens_per_bug})"
            )
        if self.tokens_per_bug % self.screens_per_bug != 0:
            raise ValueError("tokens_per_bug must divide evenly across screens")
        if not (0.0 <= self.shared_token_rate <= 1.0):
            raise ValueError(f"shared_token_rate must be in [0, 1], got {self.shared_token_rate}")


def _make_vocab(rng: np.random.Generator, size: int) -> list[str]:
    """Distinct fake words, 2 to 4 syllables each."""
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        parts = int(rng.integers(2, 5))
        word = "".join(_SYLLABLES[int(rng.integers(len(_SYLLABLES)))] for _ in range(parts))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _scaled_directions(rng: np.random.Generator, count: int, dim: int, norm: float) -> np.ndarray:
    raw = rng.normal(size=(count, dim))
    lengths = np.linalg.norm(raw, axis=1, keepdims=True)
    return raw / lengths * norm


def _screen_script(rng: np.random.Generator, cfg: SyntheticConfig) -> list[int]:
    """Visit every screen once, in random order, holding each for a stretch."""
    n = int(rng.integers(cfg.min_frames, cfg.max_frames + 1))
    order = rng.permutation(cfg.screens_per_bug)
    # one guaranteed frame per screen, the rest spread at random
    lengths = np.ones(cfg.screens_per_bug, dtype=int)
    for _ in range(n - cfg.screens_per_bug):
        lengths[int(rng.integers(cfg.screens_per_bug))] += 1
    script: list[int] = []
    for screen, length in zip(order, lengths):
        script.extend([int(screen)] * int(length))
    return script


def _frame_regions(
    rng: np.random.Generator, tokens: list[str]
) -> tuple[TextRegion, ...]:
    regions = []
    for _ in range(int(rng.integers(2, 5))):
        count = int(rng.integers(1, 4))
        picks = [tokens[int(rng.integers(len(tokens)))] for _ in range(count)]
        w = int(rng.integers(80, 400))
        h = int(rng.integers(30, 80))
        regions.append(
            TextRegion(
                x=int(rng.integers(0, _SCREEN_W - w)),
                y=int(rng.integers(0, _SCREEN_H - h)),
                w=w,
                h=h,
                text=" ".join(picks),
                confidence=round(float(rng.uniform(0.80, 0.99)), 4),
            )
        )
    return tuple(regions)


def generate_dataset(out_dir: Path | str, cfg: SyntheticConfig = SyntheticConfig()) -> Path:
    """Write a complete synthetic dataset under ``out_dir``.

    Produces per-video embedding and OCR files, a directory of codebook
    training matrices sampled from the same screen clusters (plus a fraction
    of pure-noise rows), and a manifest. Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    noise_sigma = cfg.noise_scale * cfg.signal_norm
    tokens_per_screen = cfg.tokens_per_bug // cfg.screens_per_bug

    all_centers: list[np.ndarray] = []
    manifest_apps = []
    for a in range(cfg.app_count):
        app_id = f"app{a + 1:02d}"
        vocab = _make_vocab(rng, cfg.vocab_per_app)
        bug_objs = []
        for b in range(cfg.bugs_per_app):
            bug_id = f"bug{b + 1:02d}"
            centers = _scaled_directions(rng, cfg.screens_per_bug, cfg.dim, cfg.signal_norm)
            all_centers.append(centers)
            script = _screen_script(rng, cfg)
            picks = rng.choice(cfg.vocab_per_app, size=cfg.tokens_per_bug, replace=False)
            screen_tokens = [
                [vocab[int(t)] for t in picks[s * tokens_per_screen : (s + 1) * tokens_per_screen]]
                for s in range(cfg.screens_per_bug)
            ]

            video_objs = []
            for v in range(cfg.videos_per_bug):
                video_id = f"{app_id}-{bug_id}-v{v + 1}"
                matrix = np.stack(
                    [
                        centers[s] + rng.normal(scale=noise_sigma, size=cfg.dim)
                        for s in script
                    ]
                )
                own_tokens = [
                    [
                        tok
                        if rng.random() < cfg.shared_token_rate
                        else vocab[int(rng.integers(cfg.vocab_per_app))]
                        for tok in toks
                    ]
                    for toks in screen_tokens
                ]
                texts = tuple(
                    FrameText(i, _frame_regions(rng, own_tokens[s]))
                    for i, s in enumerate(script)
                )

                rel_emb = f"videos/{app_id}/{bug_id}/{video_id}.dvbe"
                rel_ocr = f"videos/{app_id}/{bug_id}/{video_id}.ocr.jsonl"
                (out_dir / rel_emb).parent.mkdir(parents=True, exist_ok=True)
                write_embedding_file(out_dir / rel_emb, matrix, cfg.sample_stride)
                write_ocr_file(out_dir / rel_ocr, texts)
                video_objs.append(
                    {"video_id": video_id, "embedding": rel_emb, "ocr": rel_ocr}
                )
            bug_objs.append({"bug_id": bug_id, "videos": video_objs})
        manifest_apps.append({"app_id": app_id, "bugs": bug_objs})

    center_pool = np.concatenate(all_centers)
    corpus_dir = out_dir / "codebook_corpus"
    corpus_dir.mkdir(exist_ok=True)
    for f in range(cfg.codebook_files):
        rows = np.empty((cfg.codebook_rows_per_file, cfg.dim))
        for r in range(cfg.codebook_rows_per_file):
            if rng.random() < cfg.codebook_noise_row_rate:
                rows[r] = _scaled_directions(rng, 1, cfg.dim, cfg.signal_norm)[0]
            else:
                pick = int(rng.integers(center_pool.shape[0]))
                rows[r] = center_pool[pick] + rng.normal(scale=noise_sigma, size=cfg.dim)
        write_embedding_file(corpus_dir / f"train_{f:02d}.dvbe", rows, cfg.sample_stride)

    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, {"artifact_dir": ".", "apps": manifest_apps})
    return manifest_path
