"""On-disk artifact formats: embedding files, OCR files, and the dataset manifest.

Embedding file layout (little-endian throughout):

    magic   4 bytes  b"DVBE"
    version u32      currently 1
    frames  u32      frame count, >= 1
    dim     u32      embedding dimension, >= 1
    stride  u32      sample stride, >= 1
    data    frames * dim float32, row-major

OCR files are JSON lines, one object per sampled frame:

    {"frame_index": 0, "regions": [{"x": 4, "y": 8, "w": 80, "h": 24,
                                    "text": "Save", "conf": 0.97}]}

The manifest is a single JSON document grouping videos by app and bug, with
artifact paths relative to its ``artifact_dir``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .core import FrameEmbedding, FrameText, TextRegion, VideoArtifact

EMBEDDING_MAGIC = b"DVBE"
EMBEDDING_VERSION = 1
_EMBEDDING_HEADER = struct.Struct("<4sIIII")

__all__ = [
    "ArtifactFormatError",
    "ManifestError",
    "write_embedding_file",
    "read_embedding_file",
    "write_ocr_file",
    "read_ocr_file",
    "VideoEntry",
    "BugEntry",
    "AppEntry",
    "DatasetManifest",
    "write_manifest",
    "load_manifest",
    "read_video_artifact",
    "load_dataset",
    "resample",
]


class ArtifactFormatError(ValueError):
    """A malformed embedding or OCR file."""


class ManifestError(ValueError):
    """A structurally invalid dataset manifest."""


def write_embedding_file(path: Path | str, matrix: np.ndarray, sample_stride: int) -> None:
    """Write an (n_frames, dim) float array as an embedding file."""
    mat = np.asarray(matrix, dtype=np.float32)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ArtifactFormatError(
            f"{path}: embedding matrix must be 2-D and non-empty, got shape {np.shape(matrix)}"
        )
    if not np.all(np.isfinite(mat)):
        raise ArtifactFormatError(f"{path}: embedding matrix has non-finite values")
    if sample_stride < 1:
        raise ArtifactFormatError(f"{path}: sample_stride must be >= 1, got {sample_stride}")
    header = _EMBEDDING_HEADER.pack(
        EMBEDDING_MAGIC, EMBEDDING_VERSION, mat.shape[0], mat.shape[1], sample_stride
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(mat.astype("<f4").tobytes(order="C"))


def read_embedding_file(path: Path | str) -> tuple[np.ndarray, int]:
    """Read an embedding file; returns (float32 matrix, sample_stride)."""
    raw = Path(path).read_bytes()
    if len(raw) < _EMBEDDING_HEADER.size:
        raise ArtifactFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, frame_count, dim, stride = _EMBEDDING_HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise ArtifactFormatError(f"{path}: bad magic {magic!r}, expected {EMBEDDING_MAGIC!r}")
    if version != EMBEDDING_VERSION:
        raise ArtifactFormatError(f"{path}: unsupported version {version}")
    if frame_count < 1 or dim < 1:
        raise ArtifactFormatError(
            f"{path}: frame_count and dim must be >= 1, got {frame_count} and {dim}"
        )
    if stride < 1:
        raise ArtifactFormatError(f"{path}: sample_stride must be >= 1, got {stride}")
    expected = _EMBEDDING_HEADER.size + 4 * frame_count * dim
    if len(raw) != expected:
        raise ArtifactFormatError(
            f"{path}: expected {expected} bytes for {frame_count}x{dim} frames, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_EMBEDDING_HEADER.size)
    matrix = data.reshape(frame_count, dim).copy()
    if not np.all(np.isfinite(matrix)):
        raise ArtifactFormatError(f"{path}: embedding data has non-finite values")
    return matrix, stride


def write_ocr_file(path: Path | str, texts: Sequence[FrameText]) -> None:
    """Write per-frame OCR results as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for ft in texts:
            obj = {
                "frame_index": ft.frame_index,
                "regions": [
                    {
                        "x": r.x,
                        "y": r.y,
                        "w": r.w,
                        "h": r.h,
                        "text": r.text,
                        "conf": r.confidence,
                    }
                    for r in ft.regions
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_ocr_file(path: Path | str) -> tuple[FrameText, ...]:
    """Read a JSON-lines OCR file into FrameText records."""
    texts: list[FrameText] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ArtifactFormatError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            try:
                regions = tuple(
                    TextRegion(
                        x=int(r["x"]),
                        y=int(r["y"]),
                        w=int(r["w"]),
                        h=int(r["h"]),
                        text=str(r["text"]),
                        confidence=float(r["conf"]),
                    )
                    for r in obj["regions"]
                )
                texts.append(FrameText(int(obj["frame_index"]), regions))
            except (KeyError, TypeError, ValueError) as exc:
                raise ArtifactFormatError(f"{path}:{line_no}: {exc}") from exc
    return tuple(texts)


@dataclass(frozen=True)
class VideoEntry:
    video_id: str
    embedding_path: str  # relative to the manifest's artifact_dir
    ocr_path: str


@dataclass(frozen=True)
class BugEntry:
    bug_id: str
    videos: tuple[VideoEntry, ...]


@dataclass(frozen=True)
class AppEntry:
    app_id: str
    bugs: tuple[BugEntry, ...]


@dataclass(frozen=True)
class DatasetManifest:
    """Parsed dataset manifest with paths resolved against its own location."""

    root: Path  # resolved artifact directory
    apps: tuple[AppEntry, ...]

    def app(self, app_id: str) -> AppEntry:
        for app in self.apps:
            if app.app_id == app_id:
                return app
        raise ManifestError(f"unknown app {app_id!r}")

    def video_entries(self) -> Iterator[tuple[AppEntry, BugEntry, VideoEntry]]:
        for app in self.apps:
            for bug in app.bugs:
                for video in bug.videos:
                    yield app, bug, video

    def find_video(self, video_id: str) -> tuple[AppEntry, BugEntry, VideoEntry]:
        for app, bug, video in self.video_entries():
            if video.video_id == video_id:
                return app, bug, video
        raise ManifestError(f"unknown video {video_id!r}")

    def video_ids(self) -> list[str]:
        return [v.video_id for _, _, v in self.video_entries()]

    def embedding_file(self, entry: VideoEntry) -> Path:
        return self.root / entry.embedding_path

    def ocr_file(self, entry: VideoEntry) -> Path:
        return self.root / entry.ocr_path


def write_manifest(path: Path | str, manifest_obj: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest_obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: Path | str) -> DatasetManifest:
    """Parse and structurally validate a manifest file.

    Raises ManifestError for duplicate identifiers, empty groups, or missing
    fields. It does not touch artifact files; use ``validate_dataset`` or
    ``load_dataset`` for that.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc}") from exc

    if not isinstance(obj, dict) or "artifact_dir" not in obj or "apps" not in obj:
        raise ManifestError(f"{path}: manifest must have 'artifact_dir' and 'apps'")
    root = (path.parent / str(obj["artifact_dir"])).resolve()

    apps: list[AppEntry] = []
    seen_apps: set[str] = set()
    seen_videos: set[str] = set()
    for app_obj in obj["apps"]:
        app_id = str(app_obj.get("app_id", ""))
        if not app_id:
            raise ManifestError(f"{path}: app with missing or empty app_id")
        if app_id in seen_apps:
            raise ManifestError(f"{path}: duplicate app_id {app_id!r}")
        seen_apps.add(app_id)
        bugs: list[BugEntry] = []
        seen_bugs: set[str] = set()
        for bug_obj in app_obj.get("bugs", []):
            bug_id = str(bug_obj.get("bug_id", ""))
            if not bug_id:
                raise ManifestError(f"{path}: app {app_id!r} has a bug with empty bug_id")
            if bug_id in seen_bugs:
                raise ManifestError(f"{path}: app {app_id!r} has duplicate bug_id {bug_id!r}")
            seen_bugs.add(bug_id)
            videos: list[VideoEntry] = []
            for vid_obj in bug_obj.get("videos", []):
                video_id = str(vid_obj.get("video_id", ""))
                if not video_id:
                    raise ManifestError(
                        f"{path}: bug {bug_id!r} in app {app_id!r} has a video with empty video_id"
                    )
                if video_id in seen_videos:
                    raise ManifestError(f"{path}: duplicate video_id {video_id!r}")
                seen_videos.add(video_id)
                embedding = vid_obj.get("embedding")
                ocr = vid_obj.get("ocr")
                if not embedding or not ocr:
                    raise ManifestError(
                        f"{path}: video {video_id!r} must point to both an embedding and an OCR file"
                    )
                videos.append(VideoEntry(video_id, str(embedding), str(ocr)))
            if not videos:
                raise ManifestError(f"{path}: bug {bug_id!r} in app {app_id!r} has no videos")
            bugs.append(BugEntry(bug_id, tuple(videos)))
        if not bugs:
            raise ManifestError(f"{path}: app {app_id!r} has no bugs")
        apps.append(AppEntry(app_id, tuple(bugs)))
    if not apps:
        raise ManifestError(f"{path}: manifest has no apps")
    return DatasetManifest(root=root, apps=tuple(apps))


def read_video_artifact(manifest: DatasetManifest, video_id: str) -> VideoArtifact:
    """Load one video's embedding and OCR files into a VideoArtifact.

    The OCR file must cover exactly the embedding file's frame ordinals,
    in order.
    """
    app, bug, entry = manifest.find_video(video_id)
    emb_path = manifest.embedding_file(entry)
    ocr_path = manifest.ocr_file(entry)
    try:
        matrix, stride = read_embedding_file(emb_path)
    except OSError as exc:
        raise ArtifactFormatError(f"video {video_id!r}: cannot read {emb_path}: {exc}") from exc
    try:
        texts = read_ocr_file(ocr_path)
    except OSError as exc:
        raise ArtifactFormatError(f"video {video_id!r}: cannot read {ocr_path}: {exc}") from exc

    n = matrix.shape[0]
    got = [t.frame_index for t in texts]
    if got != list(range(n)):
        raise ArtifactFormatError(
            f"video {video_id!r}: OCR frame indexes {got[:5]}... must be 0..{n - 1} "
            f"matching the embedding file"
        )
    frames = tuple(FrameEmbedding(i, matrix[i]) for i in range(n))
    return VideoArtifact(
        video_id=video_id,
        app_id=app.app_id,
        bug_id=bug.bug_id,
        frames=frames,
        texts=texts,
        sample_stride=stride,
    )


def load_dataset(
    manifest: DatasetManifest, app_id: str | None = None
) -> dict[str, VideoArtifact]:
    """Load all videos (optionally one app's) and enforce a uniform embedding dim."""
    apps = [manifest.app(app_id)] if app_id is not None else list(manifest.apps)
    videos: dict[str, VideoArtifact] = {}
    dim: int | None = None
    dim_owner = ""
    for app in apps:
        for bug in app.bugs:
            for entry in bug.videos:
                art = read_video_artifact(manifest, entry.video_id)
                if dim is None:
                    dim, dim_owner = art.dim, art.video_id
                elif art.dim != dim:
                    raise ArtifactFormatError(
                        f"video {art.video_id!r} has embedding dim {art.dim}, "
                        f"but {dim_owner!r} has dim {dim}"
                    )
                videos[entry.video_id] = art
    return videos


def validate_dataset(manifest: DatasetManifest) -> list[str]:
    """Fully check a dataset: every artifact loads and dims agree.

    Returns non-fatal warnings (bugs without exactly three videos). Fatal
    problems raise ArtifactFormatError or ManifestError.
    """
    warnings: list[str] = []
    for app in manifest.apps:
        for bug in app.bugs:
            if len(bug.videos) != 3:
                warnings.append(
                    f"bug {bug.bug_id!r} in app {app.app_id!r} has "
                    f"{len(bug.videos)} videos; ranking tasks need exactly 3"
                )
    load_dataset(manifest)
    return warnings


def resample(artifact: VideoArtifact, stride: int) -> VideoArtifact:
    """Thin a stride-1 (or compatible) artifact to a coarser sample stride.

    Keeps the stored frames whose raw-video position is a multiple of
    ``stride``, renumbers them 0..k-1, and records the new stride. ``stride``
    must be a positive multiple of the artifact's current stride.
    """
    if stride < 1:
        raise ValueError(f"video {artifact.video_id!r}: stride must be >= 1, got {stride}")
    if stride % artifact.sample_stride != 0:
        raise ValueError(
            f"video {artifact.video_id!r}: cannot resample stride "
            f"{artifact.sample_stride} to {stride}: not a multiple"
        )
    factor = stride // artifact.sample_stride
    if factor == 1:
        return artifact
    frames = tuple(
        FrameEmbedding(new_idx, f.vector)
        for new_idx, f in enumerate(artifact.frames[::factor])
    )
    texts = tuple(
        FrameText(new_idx, t.regions) for new_idx, t in enumerate(artifact.texts[::factor])
    )
    return VideoArtifact(
        video_id=artifact.video_id,
        app_id=artifact.app_id,
        bug_id=artifact.bug_id,
        frames=frames,
        texts=texts,
        sample_stride=stride,
    )
