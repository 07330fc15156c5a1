"""Artifact file formats, manifest loading, and resampling."""

import json
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dupvid.core import FrameEmbedding, FrameText, TextRegion, VideoArtifact
from dupvid.ingest import (
    ArtifactFormatError,
    ManifestError,
    load_dataset,
    load_manifest,
    read_embedding_file,
    read_ocr_file,
    read_video_artifact,
    resample,
    validate_dataset,
    write_embedding_file,
    write_manifest,
    write_ocr_file,
)


class TestEmbeddingFile:
    def test_roundtrip_and_length(self, tmp_path):
        path = tmp_path / "v.dvbe"
        mat = np.arange(12, dtype=np.float32).reshape(3, 4)
        write_embedding_file(path, mat, sample_stride=6)
        assert path.stat().st_size == 20 + 4 * 3 * 4
        back, stride = read_embedding_file(path)
        assert stride == 6
        assert back.dtype == np.float32
        assert np.array_equal(back, mat)

    @settings(max_examples=30, deadline=None)
    @given(
        mat=hnp.arrays(
            np.float32,
            st.tuples(st.integers(1, 6), st.integers(1, 8)),
            elements=st.floats(-1e4, 1e4, width=32, allow_nan=False),
        ),
        stride=st.integers(1, 30),
    )
    def test_roundtrip_property(self, mat, stride):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "v.dvbe"
            write_embedding_file(path, mat, stride)
            back, back_stride = read_embedding_file(path)
        assert back_stride == stride
        assert np.array_equal(back, mat)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "v.dvbe"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ArtifactFormatError, match="magic"):
            read_embedding_file(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.dvbe"
        path.write_bytes(struct.pack("<4sIIII", b"DVBE", 9, 1, 1, 1) + b"\x00" * 4)
        with pytest.raises(ArtifactFormatError, match="version"):
            read_embedding_file(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "v.dvbe"
        path.write_bytes(b"DVBE\x01")
        with pytest.raises(ArtifactFormatError, match="truncated"):
            read_embedding_file(path)

    def test_length_mismatch(self, tmp_path):
        path = tmp_path / "v.dvbe"
        path.write_bytes(struct.pack("<4sIIII", b"DVBE", 1, 2, 3, 1) + b"\x00" * 8)
        with pytest.raises(ArtifactFormatError, match="expected"):
            read_embedding_file(path)

    def test_zero_frames_rejected(self, tmp_path):
        path = tmp_path / "v.dvbe"
        path.write_bytes(struct.pack("<4sIIII", b"DVBE", 1, 0, 3, 1))
        with pytest.raises(ArtifactFormatError, match=">= 1"):
            read_embedding_file(path)

    def test_non_finite_rejected_on_write(self, tmp_path):
        mat = np.array([[np.nan, 1.0]], dtype=np.float32)
        with pytest.raises(ArtifactFormatError, match="finite"):
            write_embedding_file(tmp_path / "v.dvbe", mat, 1)

    def test_zero_stride_rejected(self, tmp_path):
        with pytest.raises(ArtifactFormatError, match="stride"):
            write_embedding_file(tmp_path / "v.dvbe", np.ones((1, 2), np.float32), 0)


class TestOcrFile:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "v.jsonl"
        texts = (
            FrameText(0, (TextRegion(1, 2, 30, 12, "Save file", 0.97),)),
            FrameText(1, ()),
        )
        write_ocr_file(path, texts)
        back = read_ocr_file(path)
        assert back == texts

    def test_empty_regions_on_all_frames_is_valid(self, tmp_path):
        path = tmp_path / "v.jsonl"
        texts = tuple(FrameText(i, ()) for i in range(3))
        write_ocr_file(path, texts)
        assert read_ocr_file(path) == texts

    def test_invalid_json_line_reported_with_line_number(self, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text('{"frame_index": 0, "regions": []}\nnot json\n')
        with pytest.raises(ArtifactFormatError, match=":2:"):
            read_ocr_file(path)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "v.jsonl"
        path.write_text('{"frame_index": 0, "regions": [{"x": 1}]}\n')
        with pytest.raises(ArtifactFormatError):
            read_ocr_file(path)

    def test_unicode_text_roundtrip(self, tmp_path):
        path = tmp_path / "v.jsonl"
        texts = (FrameText(0, (TextRegion(0, 0, 10, 10, "Café über", 0.5),)),)
        write_ocr_file(path, texts)
        assert read_ocr_file(path)[0].regions[0].text == "Café über"


def build_dataset(root, apps, dim=4, stride=1, frame_counts=None):
    """Write a small on-disk dataset; apps = {app_id: {bug_id: [video_ids]}}."""
    art = root / "artifacts"
    art.mkdir(exist_ok=True)
    manifest_apps = []
    counter = 0
    for app_id, bugs in apps.items():
        bug_list = []
        for bug_id, video_ids in bugs.items():
            vid_list = []
            for video_id in video_ids:
                n = frame_counts.get(video_id, 3) if frame_counts else 3
                rng = np.random.default_rng(counter)
                counter += 1
                mat = rng.normal(size=(n, dim)).astype(np.float32)
                write_embedding_file(art / f"{video_id}.dvbe", mat, stride)
                texts = tuple(
                    FrameText(i, (TextRegion(0, 0, 20, 10, f"text {video_id} {i}", 0.9),))
                    for i in range(n)
                )
                write_ocr_file(art / f"{video_id}.jsonl", texts)
                vid_list.append(
                    {
                        "video_id": video_id,
                        "embedding": f"{video_id}.dvbe",
                        "ocr": f"{video_id}.jsonl",
                    }
                )
            bug_list.append({"bug_id": bug_id, "videos": vid_list})
        manifest_apps.append({"app_id": app_id, "bugs": bug_list})
    manifest_path = root / "manifest.json"
    write_manifest(manifest_path, {"artifact_dir": "artifacts", "apps": manifest_apps})
    return manifest_path


class TestManifest:
    def test_load_and_enumerate(self, tmp_path):
        path = build_dataset(tmp_path, {"app1": {"bugA": ["v1", "v2"], "bugB": ["v3"]}})
        m = load_manifest(path)
        assert [a.app_id for a in m.apps] == ["app1"]
        assert m.video_ids() == ["v1", "v2", "v3"]
        assert m.app("app1").bugs[0].bug_id == "bugA"
        _, bug, entry = m.find_video("v3")
        assert bug.bug_id == "bugB"
        assert m.embedding_file(entry).exists()

    def test_paths_resolve_relative_to_manifest(self, tmp_path):
        path = build_dataset(tmp_path, {"a": {"b": ["v1"]}})
        nested = tmp_path / "elsewhere"
        nested.mkdir()
        moved = nested / "manifest.json"
        obj = json.loads(path.read_text())
        obj["artifact_dir"] = "../artifacts"
        moved.write_text(json.dumps(obj))
        m = load_manifest(moved)
        assert read_video_artifact(m, "v1").video_id == "v1"

    def test_duplicate_video_id_rejected(self, tmp_path):
        path = build_dataset(tmp_path, {"a": {"b": ["v1"]}})
        obj = json.loads(path.read_text())
        obj["apps"][0]["bugs"][0]["videos"].append(
            obj["apps"][0]["bugs"][0]["videos"][0]
        )
        path.write_text(json.dumps(obj))
        with pytest.raises(ManifestError, match="duplicate video_id 'v1'"):
            load_manifest(path)

    def test_duplicate_app_id_rejected(self, tmp_path):
        path = build_dataset(tmp_path, {"a": {"b": ["v1"]}})
        obj = json.loads(path.read_text())
        obj["apps"].append(obj["apps"][0])
        path.write_text(json.dumps(obj))
        with pytest.raises(ManifestError, match="duplicate app_id"):
            load_manifest(path)

    def test_bug_without_videos_rejected(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(
            json.dumps(
                {
                    "artifact_dir": ".",
                    "apps": [{"app_id": "a", "bugs": [{"bug_id": "b", "videos": []}]}],
                }
            )
        )
        with pytest.raises(ManifestError, match="no videos"):
            load_manifest(path)

    def test_missing_ocr_pointer_rejected(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(
            json.dumps(
                {
                    "artifact_dir": ".",
                    "apps": [
                        {
                            "app_id": "a",
                            "bugs": [
                                {
                                    "bug_id": "b",
                                    "videos": [{"video_id": "v", "embedding": "v.dvbe"}],
                                }
                            ],
                        }
                    ],
                }
            )
        )
        with pytest.raises(ManifestError, match="video 'v'"):
            load_manifest(path)

    def test_unknown_video_lookup(self, tmp_path):
        m = load_manifest(build_dataset(tmp_path, {"a": {"b": ["v1"]}}))
        with pytest.raises(ManifestError, match="ghost"):
            m.find_video("ghost")


class TestVideoLoading:
    def test_artifact_fields(self, tmp_path):
        m = load_manifest(build_dataset(tmp_path, {"appX": {"bugY": ["v1"]}}, stride=6))
        art = read_video_artifact(m, "v1")
        assert art.app_id == "appX"
        assert art.bug_id == "bugY"
        assert art.sample_stride == 6
        assert len(art.frames) == len(art.texts) == 3

    def test_ocr_embedding_index_mismatch(self, tmp_path):
        m = load_manifest(build_dataset(tmp_path, {"a": {"b": ["v1"]}}))
        _, _, entry = m.find_video("v1")
        texts = (FrameText(0, ()), FrameText(2, ()), FrameText(3, ()))
        write_ocr_file(m.ocr_file(entry), texts)
        with pytest.raises(ArtifactFormatError, match="video 'v1'"):
            read_video_artifact(m, "v1")

    def test_missing_embedding_file_names_video(self, tmp_path):
        m = load_manifest(build_dataset(tmp_path, {"a": {"b": ["v1"]}}))
        _, _, entry = m.find_video("v1")
        m.embedding_file(entry).unlink()
        with pytest.raises(ArtifactFormatError, match="v1"):
            read_video_artifact(m, "v1")

    def test_dim_mismatch_names_both_videos(self, tmp_path):
        path = build_dataset(tmp_path, {"a": {"b": ["v1"], "c": ["v2"]}})
        m = load_manifest(path)
        _, _, entry = m.find_video("v2")
        write_embedding_file(m.embedding_file(entry), np.ones((2, 9), np.float32), 1)
        with pytest.raises(ArtifactFormatError, match="v2"):
            load_dataset(m)

    def test_validate_warns_on_non_triple_bugs(self, tmp_path):
        m = load_manifest(build_dataset(tmp_path, {"a": {"b": ["v1", "v2"]}}))
        warnings = validate_dataset(m)
        assert len(warnings) == 1
        assert "'b'" in warnings[0]

    def test_validate_clean_dataset(self, tmp_path):
        m = load_manifest(
            build_dataset(tmp_path, {"a": {"b": ["v1", "v2", "v3"]}})
        )
        assert validate_dataset(m) == []


class TestResample:
    def make(self, n, stride=1):
        frames = tuple(FrameEmbedding(i, np.array([float(i)])) for i in range(n))
        texts = tuple(FrameText(i, ()) for i in range(n))
        return VideoArtifact("v", "a", "b", frames, texts, stride)

    def test_twelve_frames_to_stride_six(self):
        out = resample(self.make(12), 6)
        assert [f.vector[0] for f in out.frames] == [0.0, 6.0]
        assert [f.frame_index for f in out.frames] == [0, 1]
        assert out.sample_stride == 6

    def test_seven_frames_to_stride_six(self):
        out = resample(self.make(7), 6)
        assert [f.vector[0] for f in out.frames] == [0.0, 6.0]

    def test_identity_when_stride_matches(self):
        art = self.make(5, stride=3)
        assert resample(art, 3) is art

    def test_non_multiple_stride_rejected(self):
        art = self.make(5, stride=6)
        with pytest.raises(ValueError, match="not a multiple"):
            resample(art, 4)

    def test_compatible_coarsening(self):
        art = self.make(6, stride=2)  # raw positions 0, 2, 4, 6, 8, 10
        out = resample(art, 6)
        assert [f.vector[0] for f in out.frames] == [0.0, 3.0]
        assert out.sample_stride == 6

    def test_texts_follow_frames(self):
        frames = tuple(FrameEmbedding(i, np.array([float(i)])) for i in range(4))
        texts = tuple(
            FrameText(i, (TextRegion(0, 0, 5, 5, f"t{i}", 0.9),)) for i in range(4)
        )
        art = VideoArtifact("v", "a", "b", frames, texts, 1)
        out = resample(art, 2)
        assert [t.regions[0].text for t in out.texts] == ["t0", "t2"]
        assert [t.frame_index for t in out.texts] == [0, 1]
