"""vidextract: screen recordings in, retrieval-engine artifact files out."""

from .artifacts import FrameRegions, TextRegion
from .config import MIN_REGION_CHOICES, ExtractorConfig

__all__ = ["ExtractorConfig", "MIN_REGION_CHOICES", "FrameRegions", "TextRegion"]

__version__ = "0.1.0"
