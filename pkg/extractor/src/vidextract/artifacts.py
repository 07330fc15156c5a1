"""Writers for the retrieval engine's artifact files.

These formats are the hand-off point to the duplicate-detection engine; it
validates them with its ``validate`` command, and nothing else is shared.

Embedding file (little-endian throughout):

    magic   4 bytes  b"DVBE"
    version u32      currently 1
    frames  u32      sampled-frame count, >= 1
    dim     u32      embedding dimension, >= 1
    stride  u32      sample stride, >= 1
    data    frames * dim float32, row-major

OCR file: JSON lines, one object per sampled frame, frame_index counting
sampled frames 0..n-1 in step with the embedding rows:

    {"frame_index": 0, "regions": [{"x": 4, "y": 8, "w": 80, "h": 24,
                                    "text": "Save", "conf": 0.97}]}

Manifest: one JSON document grouping videos by app and bug, artifact paths
relative to its ``artifact_dir``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "EMBEDDING_MAGIC",
    "EMBEDDING_VERSION",
    "TextRegion",
    "FrameRegions",
    "write_embedding_file",
    "write_ocr_file",
    "upsert_manifest_entry",
]

EMBEDDING_MAGIC = b"DVBE"
EMBEDDING_VERSION = 1
_EMBEDDING_HEADER = struct.Struct("<4sIIII")


@dataclass(frozen=True)
class TextRegion:
    """One recognized text region, pixel coordinates in the source frame."""

    x: int
    y: int
    w: int
    h: int
    text: str
    conf: float


@dataclass(frozen=True)
class FrameRegions:
    """All regions found in one sampled frame."""

    frame_index: int
    regions: tuple[TextRegion, ...]


def write_embedding_file(path: Path | str, matrix: np.ndarray, sample_stride: int) -> None:
    """Write an (n_frames, dim) float array in the engine's binary layout."""
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(
            f"{path}: embedding matrix must be 2-D and non-empty, got shape {np.shape(matrix)}"
        )
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{path}: embedding matrix has non-finite values")
    if sample_stride < 1:
        raise ValueError(f"{path}: sample_stride must be >= 1, got {sample_stride}")
    header = _EMBEDDING_HEADER.pack(
        EMBEDDING_MAGIC, EMBEDDING_VERSION, mat.shape[0], mat.shape[1], sample_stride
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(mat.tobytes(order="C"))


def write_ocr_file(path: Path | str, frames: Sequence[FrameRegions]) -> None:
    """Write per-frame OCR results as JSON lines, one frame per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            obj = {
                "frame_index": frame.frame_index,
                "regions": [
                    {"x": r.x, "y": r.y, "w": r.w, "h": r.h, "text": r.text, "conf": r.conf}
                    for r in frame.regions
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def upsert_manifest_entry(
    manifest_path: Path | str,
    app_id: str,
    bug_id: str,
    video_id: str,
    embedding_rel: str,
    ocr_rel: str,
) -> None:
    """Add or replace one video entry in a manifest, creating the file if needed.

    Entries stay sorted by id so repeated runs produce identical bytes.
    A video_id that already exists under a different app or bug is an error;
    under the same app and bug its paths are replaced.
    """
    manifest_path = Path(manifest_path)
    if manifest_path.exists():
        try:
            doc = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{manifest_path}: existing manifest is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or not isinstance(doc.get("apps"), list):
            raise ValueError(f"{manifest_path}: existing file is not a dataset manifest")
    else:
        doc = {"artifact_dir": ".", "apps": []}

    for app in doc["apps"]:
        for bug in app.get("bugs", []):
            for video in bug.get("videos", []):
                if video.get("video_id") != video_id:
                    continue
                if app.get("app_id") != app_id or bug.get("bug_id") != bug_id:
                    raise ValueError(
                        f"{manifest_path}: video {video_id!r} already registered under "
                        f"app {app.get('app_id')!r} bug {bug.get('bug_id')!r}"
                    )

    app = next((a for a in doc["apps"] if a.get("app_id") == app_id), None)
    if app is None:
        app = {"app_id": app_id, "bugs": []}
        doc["apps"].append(app)
    bug = next((b for b in app["bugs"] if b.get("bug_id") == bug_id), None)
    if bug is None:
        bug = {"bug_id": bug_id, "videos": []}
        app["bugs"].append(bug)
    bug["videos"] = [v for v in bug["videos"] if v.get("video_id") != video_id]
    bug["videos"].append({"video_id": video_id, "embedding": embedding_rel, "ocr": ocr_rel})

    doc["apps"].sort(key=lambda a: a.get("app_id", ""))
    for app in doc["apps"]:
        app["bugs"].sort(key=lambda b: b.get("bug_id", ""))
        for bug in app["bugs"]:
            bug["videos"].sort(key=lambda v: v.get("video_id", ""))

    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
