"""Extraction settings shared by the embedding and OCR pipelines."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

__all__ = ["MIN_REGION_CHOICES", "BACKBONES", "RECOGNIZERS", "ExtractorConfig"]

# Minimum width x height a detected text region must cover (in area) to be
# kept. The coarse default suppresses icon labels and antialiasing specks;
# the finer settings exist for recall-oriented runs.
MIN_REGION_CHOICES: tuple[tuple[int, int], ...] = ((5, 5), (40, 20), (80, 40))

BACKBONES: tuple[str, ...] = ("vit-b16",)
RECOGNIZERS: tuple[str, ...] = ("glyph-template",)


@dataclass(frozen=True)
class ExtractorConfig:
    """How to turn one video file into artifact files.

    ``sample_stride`` keeps every n-th decoded frame starting at frame 0.
    Frames are resized to ``resize`` (width, height) before embedding. The
    ``backbone`` names the embedding network; without a ``checkpoint`` it
    runs with a fixed-seed random initialization, so embeddings are
    deterministic but untrained. Point ``checkpoint`` at a state-dict file
    to use trained weights. ``min_region`` is the text-detector area filter
    and ``recognizer`` names the text recognition stage.
    """

    sample_stride: int = 6
    resize: tuple[int, int] = (224, 224)
    backbone: str = "vit-b16"
    checkpoint: Path | None = None
    min_region: tuple[int, int] = (80, 40)
    recognizer: str = "glyph-template"

    def __post_init__(self) -> None:
        if self.sample_stride < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")
        if len(self.resize) != 2 or min(self.resize) < 1:
            raise ValueError(f"resize must be two positive pixel sizes, got {self.resize!r}")
        if tuple(self.min_region) not in MIN_REGION_CHOICES:
            choices = ", ".join(f"{w}x{h}" for w, h in MIN_REGION_CHOICES)
            raise ValueError(
                f"min_region must be one of {choices}, got "
                f"{self.min_region[0]}x{self.min_region[1]}"
            )
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}, expected one of {BACKBONES}")
        if self.recognizer not in RECOGNIZERS:
            raise ValueError(
                f"unknown recognizer {self.recognizer!r}, expected one of {RECOGNIZERS}"
            )

    @property
    def min_region_area(self) -> int:
        return self.min_region[0] * self.min_region[1]
