"""Video decoding and frame sampling.

Frames come out as RGB uint8 arrays of shape (height, width, 3). Sampling
keeps every ``stride``-th decoded frame starting at frame 0, so a video
with n frames yields ceil(n / stride) samples.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import cv2
import numpy as np

__all__ = ["VideoReadError", "SampledFrame", "sample_indices", "iter_sampled_frames", "count_frames"]


class VideoReadError(ValueError):
    """The file could not be opened or produced no frames."""


class SampledFrame:
    """One kept frame: its ordinal among samples and its raw-video position."""

    __slots__ = ("ordinal", "frame_index", "image")

    def __init__(self, ordinal: int, frame_index: int, image: np.ndarray) -> None:
        self.ordinal = ordinal
        self.frame_index = frame_index
        self.image = image


def sample_indices(frame_count: int, stride: int) -> list[int]:
    """Raw-frame indices kept at the given stride: 0, stride, 2*stride, ..."""
    if frame_count < 0:
        raise ValueError(f"frame_count must be >= 0, got {frame_count}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return list(range(0, frame_count, stride))


def _open(path: Path | str) -> cv2.VideoCapture:
    path = Path(path)
    if not path.is_file():
        raise VideoReadError(f"{path}: no such file")
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise VideoReadError(f"{path}: not a decodable video")
    return capture


def iter_sampled_frames(path: Path | str, stride: int) -> Iterator[SampledFrame]:
    """Decode sequentially, yielding every stride-th frame as RGB.

    Raises VideoReadError if the file cannot be opened or contains no
    decodable frames at all.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    capture = _open(path)
    try:
        ordinal = 0
        frame_index = 0
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            if frame_index % stride == 0:
                rgb = cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
                yield SampledFrame(ordinal, frame_index, rgb)
                ordinal += 1
            frame_index += 1
        if frame_index == 0:
            raise VideoReadError(f"{path}: no decodable frames")
    finally:
        capture.release()


def count_frames(path: Path | str) -> int:
    """Count decodable frames by walking the file (container metadata can lie)."""
    capture = _open(path)
    try:
        count = 0
        while capture.grab():
            count += 1
        if count == 0:
            raise VideoReadError(f"{path}: no decodable frames")
        return count
    finally:
        capture.release()
