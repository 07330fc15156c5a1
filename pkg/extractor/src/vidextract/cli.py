"""Command line interface: turn a screen recording into retrieval artifacts.

One subcommand::

    vidextract extract --video crash.mp4 --out-dir artifacts/

decodes the video once, writes ``<video-id>.dvbe`` (frame embeddings) and
``<video-id>.ocr.jsonl`` (per-frame text regions) into the output directory,
and records the pair in ``<out-dir>/manifest.json`` so the duplicate-detection
engine can ingest the directory directly (``dupvid validate --manifest ...``).

Exit codes: 0 on success, 1 for validation problems (bad flags, unreadable
video, malformed manifest), 2 for unexpected runtime failures.  Set
VIDEXTRACT_LOG=INFO (or DEBUG) for progress logging.

Each invocation handles one video.  The manifest upsert rewrites the whole
file, so when extracting a corpus in parallel, run one process per video but
serialise on the output directory (or merge manifests afterwards).
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

from .artifacts import upsert_manifest_entry, write_embedding_file, write_ocr_file
from .config import MIN_REGION_CHOICES, ExtractorConfig
from .embed import EmbeddingError, FrameEmbedder
from .pipeline import extract_artifacts
from .video import VideoReadError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

log = logging.getLogger(__name__)

_MIN_REGION_NAMES = {f"{w}x{h}": (w, h) for w, h in MIN_REGION_CHOICES}


def _parse_min_region(value: str) -> tuple[int, int]:
    try:
        return _MIN_REGION_NAMES[value.lower()]
    except KeyError:
        choices = ", ".join(sorted(_MIN_REGION_NAMES))
        raise argparse.ArgumentTypeError(
            f"unknown filter {value!r} (choose from {choices})"
        ) from None


def _default_video_id(video: Path) -> str:
    """Derive an identifier from the file name: keep word characters only."""
    slug = re.sub(r"[^A-Za-z0-9_-]+", "-", video.stem).strip("-")
    return slug or "video"


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = ExtractorConfig(
        sample_stride=args.stride,
        checkpoint=args.checkpoint,
        min_region=args.min_region,
    )
    video_id = args.video_id or _default_video_id(args.video)
    bug_id = args.bug or video_id
    if not args.video.is_file():
        raise VideoReadError(f"{args.video}: no such file")

    log.info("loading %s backbone", cfg.backbone)
    embedder = FrameEmbedder(cfg)
    embeddings, text_frames = extract_artifacts(args.video, cfg, embedder=embedder)

    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    embedding_path = out_dir / f"{video_id}.dvbe"
    ocr_path = out_dir / f"{video_id}.ocr.jsonl"
    write_embedding_file(embedding_path, embeddings.matrix, cfg.sample_stride)
    write_ocr_file(ocr_path, text_frames)
    manifest_path = out_dir / "manifest.json"
    upsert_manifest_entry(
        manifest_path,
        app_id=args.app,
        bug_id=bug_id,
        video_id=video_id,
        embedding_rel=embedding_path.name,
        ocr_rel=ocr_path.name,
    )

    region_total = sum(len(frame.regions) for frame in text_frames)
    print(
        f"{video_id}: {embeddings.frame_count} sampled frames (stride"
        f" {cfg.sample_stride}), {embeddings.matrix.shape[1]}-dim embeddings,"
        f" {region_total} text regions"
    )
    print(f"embeddings -> {embedding_path}")
    print(f"ocr -> {ocr_path}")
    print(f"manifest -> {manifest_path}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; we reserve 2 for runtime."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vidextract", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p_extract = commands.add_parser(
        "extract", help="extract embeddings and text from one recording"
    )
    p_extract.add_argument("--video", type=Path, required=True)
    p_extract.add_argument(
        "--out-dir", type=Path, required=True, help="artifact directory"
    )
    p_extract.add_argument(
        "--stride", type=int, default=6, help="sample every Nth frame"
    )
    p_extract.add_argument(
        "--min-region",
        type=_parse_min_region,
        default="80x40",
        help="minimum text-region size WxH: 5x5, 40x20 or 80x40",
    )
    p_extract.add_argument(
        "--checkpoint", type=Path, help="backbone weights (.pt state dict)"
    )
    p_extract.add_argument(
        "--app", default="videos", help="app id to file the video under"
    )
    p_extract.add_argument(
        "--bug", help="bug id for the manifest (default: the video id)"
    )
    p_extract.add_argument(
        "--video-id", help="identifier for the artifacts (default: file stem)"
    )
    p_extract.set_defaults(func=cmd_extract)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse help/usage exits; keep main() returning int
        return int(exc.code or 0)
    level_name = os.environ.get("VIDEXTRACT_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (VideoReadError, EmbeddingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("unhandled failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
