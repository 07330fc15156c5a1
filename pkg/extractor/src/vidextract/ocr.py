"""Text detection and recognition for single video frames.

Two stages, both classical and fully deterministic:

1. Detection: a morphological gradient picks up stroke edges, Otsu
   thresholding binarizes them, and a wide closing merges characters into
   line-shaped components. Component bounding boxes become region
   proposals; proposals below the configured minimum area are dropped at
   this stage, before any recognition runs.

2. Recognition: inside each proposal the characters are segmented by
   connected components (with x-overlap merging so the dots of i and j
   rejoin their stems), contrast-normalized without binarizing so the
   antialiased stroke shape survives, and matched against bundled
   grayscale glyph templates by soft intersection-over-union. Whitespace
   is inferred from horizontal gaps. The region confidence is the mean
   best match score of its characters.

Plain flat-UI screen content is the target; photographic or heavily
gradient-filled frames will produce noisy proposals, which downstream
consumers tolerate because region text is weighted by corpus rarity.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import cv2
import numpy as np

from .artifacts import TextRegion
from .config import ExtractorConfig

__all__ = ["detect_regions", "GlyphRecognizer", "extract_frame_text"]

# Components whose pixel count fills less than this fraction of their
# bounding box are hollow shells (panel borders, window outlines), not text
# lines, which the closing step turns into nearly solid bands.
_MIN_FILL = 0.22

# No glyph fits in a box narrower or shorter than this; it also discards
# single-pixel rules and antialiasing slivers regardless of the area filter.
_MIN_SIDE = 3

# Character matches below this score are treated as unknown symbols: they
# still count toward the region's confidence but emit no character.
_MIN_CHAR_SCORE = 0.30

# Below this score a box is suspected to hold touching glyphs the atlas has
# no pair template for; a valley split is attempted and kept if it beats
# the whole-box score by the gain margin.
_SPLIT_BELOW = 0.45
_SPLIT_GAIN = 0.10

# A horizontal gap wider than this fraction of the line's ink height splits
# words; narrower gaps are ordinary letter spacing. Measured on rendered
# sans-serif text: intra-word gaps reach 0.26 of the line height ahead of
# narrow letters, real spaces start around 0.45.
_SPACE_FRACTION = 0.33
# Anything this small against the line's tallest box is punctuation, not a
# glyph; the descender of a comma keeps it under 0.3 while letters stay above.
_DOT_FRACTION = 0.30

_GRADIENT_KERNEL = cv2.getStructuringElement(cv2.MORPH_RECT, (3, 3))
_CLOSE_KERNEL = cv2.getStructuringElement(cv2.MORPH_RECT, (15, 3))


def _to_gray(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        return cv2.cvtColor(image, cv2.COLOR_RGB2GRAY)
    return image


def detect_regions(image: np.ndarray, min_area: int) -> list[tuple[int, int, int, int]]:
    """Propose text-line bounding boxes (x, y, w, h) with area >= min_area.

    The area filter is the only knob; everything else is fixed so that the
    proposal set at a fine filter is a superset of the set at a coarser one.
    Boxes come back sorted top-to-bottom, then left-to-right.
    """
    gray = _to_gray(image)
    gradient = cv2.morphologyEx(gray, cv2.MORPH_GRADIENT, _GRADIENT_KERNEL)
    _, binary = cv2.threshold(gradient, 0, 255, cv2.THRESH_BINARY | cv2.THRESH_OTSU)
    merged = cv2.morphologyEx(binary, cv2.MORPH_CLOSE, _CLOSE_KERNEL)
    count, _, stats, _ = cv2.connectedComponentsWithStats(merged, connectivity=8)

    boxes: list[tuple[int, int, int, int]] = []
    for label in range(1, count):
        x, y, w, h, pixels = (int(v) for v in stats[label])
        if w < _MIN_SIDE or h < _MIN_SIDE:
            continue
        if w * h < min_area:
            continue
        if pixels / (w * h) < _MIN_FILL:
            continue
        boxes.append((x, y, w, h))
    boxes.sort(key=lambda b: (b[1], b[0]))
    return boxes


def _ink_mask(gray_crop: np.ndarray) -> np.ndarray:
    """Binarize a crop with ink as the minority (foreground) class."""
    _, binary = cv2.threshold(gray_crop, 0, 255, cv2.THRESH_BINARY | cv2.THRESH_OTSU)
    ink = binary > 0
    if ink.mean() > 0.5:
        ink = ~ink
    return ink


def _ink_intensity(gray_crop: np.ndarray, ink: np.ndarray) -> np.ndarray:
    """Map a crop to ink intensity in [0, 1], keeping antialiased edges.

    The binary mask only supplies the foreground and background levels;
    every pixel is then placed on the continuous scale between them.
    """
    crop = gray_crop.astype(np.float32)
    if not ink.any() or ink.all():
        return np.zeros_like(crop)
    fg = float(crop[ink].mean())
    bg = float(crop[~ink].mean())
    if fg == bg:
        return np.zeros_like(crop)
    return np.clip((bg - crop) / (bg - fg), 0.0, 1.0)


def _char_boxes(ink: np.ndarray) -> list[tuple[int, int, int, int]]:
    """Character candidates left-to-right; x-overlapping parts merge."""
    count, _, stats, _ = cv2.connectedComponentsWithStats(
        ink.astype(np.uint8), connectivity=8
    )
    parts = sorted(
        (int(stats[i][0]), int(stats[i][1]), int(stats[i][2]), int(stats[i][3]))
        for i in range(1, count)
    )
    merged: list[list[int]] = []
    for x, y, w, h in parts:
        if merged:
            mx, my, mw, mh = merged[-1]
            overlap = min(mx + mw, x + w) - max(mx, x)
            if overlap > 0.5 * min(w, mw):
                nx, ny = min(mx, x), min(my, y)
                merged[-1] = [
                    nx,
                    ny,
                    max(mx + mw, x + w) - nx,
                    max(my + mh, y + h) - ny,
                ]
                continue
        merged.append([x, y, w, h])
    return [tuple(b) for b in merged]


class GlyphRecognizer:
    """Matches character crops against height-normalized glyph templates."""

    MASK_HEIGHT = 32

    def __init__(self, atlas_path: Path | str | None = None) -> None:
        if atlas_path is None:
            source = resources.files("vidextract").joinpath("data/glyphs.npz")
            with resources.as_file(source) as concrete:
                self._load(np.load(concrete))
        else:
            self._load(np.load(atlas_path))

    def _load(self, archive) -> None:
        charset = str(archive["charset"])
        entries: list[tuple[str, str]] = [(ch, f"g{ord(ch)}") for ch in charset]
        if "multi_texts" in archive:
            entries += [(str(t), f"m{i}") for i, t in enumerate(archive["multi_texts"])]
        self._glyphs: list[tuple[str, np.ndarray]] = []
        for text, key in entries:
            mask = archive[key].astype(np.float32) / 255.0
            if mask.shape[0] != self.MASK_HEIGHT:
                raise ValueError(
                    f"glyph atlas mask for {text!r} has height {mask.shape[0]}, "
                    f"expected {self.MASK_HEIGHT}"
                )
            self._glyphs.append((text, mask))
        if not self._glyphs:
            raise ValueError("glyph atlas is empty")

    def _match_glyph(self, intensity_box: np.ndarray) -> tuple[str, float]:
        """Best template for one box of ink intensity; soft IoU score."""
        height, width = intensity_box.shape
        scaled_w = max(1, round(width * self.MASK_HEIGHT / height))
        candidate = cv2.resize(
            intensity_box, (scaled_w, self.MASK_HEIGHT), interpolation=cv2.INTER_AREA
        )
        best_text, best_score = "", 0.0
        for text, template in self._glyphs:
            w = max(candidate.shape[1], template.shape[1])
            a = _center_pad(candidate, w)
            b = _center_pad(template, w)
            union = np.maximum(a, b).sum()
            if union <= 0.0:
                continue
            score = float(np.minimum(a, b).sum() / union)
            if score > best_score:
                best_text, best_score = text, score
        return best_text, best_score

    def _read_box(self, intensity_box: np.ndarray) -> list[tuple[str, float]]:
        """Match one segmented box, splitting it if touching glyphs defeat it.

        Fused pairs the atlas knows (rt, ft, ...) match directly. Anything
        else that matches poorly gets a cut at the sparsest interior ink
        column, kept only if the halves score clearly better; genuinely
        unknown symbols stay unsplit and score low.
        """
        text, score = self._match_glyph(intensity_box)
        width = intensity_box.shape[1]
        if score >= _SPLIT_BELOW or width <= 2 * _MIN_SIDE:
            return [(text, score)]
        profile = intensity_box.sum(axis=0)
        interior = profile[_MIN_SIDE : width - _MIN_SIDE]
        cut = _MIN_SIDE + int(np.argmin(interior))
        halves = []
        for part in (intensity_box[:, :cut], intensity_box[:, cut:]):
            cols = np.flatnonzero(part.max(axis=0) > 0.25)
            rows = np.flatnonzero(part.max(axis=1) > 0.25)
            if cols.size == 0 or rows.size == 0:
                return [(text, score)]
            halves.append(part[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1])
        split = self._read_box(halves[0]) + self._read_box(halves[1])
        split_score = float(np.mean([s for _, s in split]))
        if split_score > score + _SPLIT_GAIN:
            return split
        return [(text, score)]

    def recognize(self, gray_crop: np.ndarray) -> tuple[str, float]:
        """Read one region crop; returns (text, confidence in [0, 1])."""
        if gray_crop.size == 0 or min(gray_crop.shape[:2]) < 2:
            return "", 0.0
        ink = _ink_mask(gray_crop)
        boxes = _char_boxes(ink)
        if not boxes:
            return "", 0.0
        intensity = _ink_intensity(gray_crop, ink)

        line_height = max(h for _, _, _, h in boxes)
        space_gap = max(2.0, _SPACE_FRACTION * line_height)
        dot_size = _DOT_FRACTION * line_height
        pieces: list[str] = []
        scores: list[float] = []
        prev_end: int | None = None
        for x, y, w, h in boxes:
            if len(boxes) > 1 and h <= dot_size and w <= dot_size:
                # Periods, commas and the like: no template can represent
                # them, so leave them out and let the widened gap around
                # them read as a word break where it is wide enough.
                continue
            if prev_end is not None and x - prev_end > space_gap:
                pieces.append(" ")
            prev_end = x + w
            for text, score in self._read_box(intensity[y : y + h, x : x + w]):
                scores.append(score)
                if score >= _MIN_CHAR_SCORE:
                    pieces.append(text)
        text = "".join(pieces).strip()
        confidence = float(np.mean(scores)) if scores else 0.0
        return text, round(confidence, 4)


def _center_pad(mask: np.ndarray, width: int) -> np.ndarray:
    pad = width - mask.shape[1]
    if pad <= 0:
        return mask
    left = pad // 2
    return np.pad(mask, ((0, 0), (left, pad - left)))


def extract_frame_text(
    image: np.ndarray, cfg: ExtractorConfig, recognizer: GlyphRecognizer
) -> tuple[TextRegion, ...]:
    """Detect and read all text regions in one frame."""
    gray = _to_gray(image)
    regions: list[TextRegion] = []
    for x, y, w, h in detect_regions(gray, cfg.min_region_area):
        text, conf = recognizer.recognize(gray[y : y + h, x : x + w])
        regions.append(TextRegion(x=x, y=y, w=w, h=h, text=text, conf=conf))
    return tuple(regions)
