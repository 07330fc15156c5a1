#!/usr/bin/env python3
"""Render the glyph template atlas bundled with vidextract.

The text recognizer matches character crops against height-normalized
grayscale masks of each glyph in a reference font. This script renders the
masks from a TrueType font (default: DejaVu Sans, the face our sample
recordings use) and packs them into src/vidextract/data/glyphs.npz.

Besides single characters the atlas carries multi-character templates:
the shaper ligatures fi and fl, plus digraphs whose glyphs fuse into one
connected component at interface text sizes (the crossbar of t or the arm
of r bleeding into its neighbor). Segmentation cannot cut those, so the
recognizer needs whole-pair templates to read them.

Stored arrays:
    g65        float ink mask as uint8 0..255, shape (32, w), for "A"
    m0, m1...  masks for the multi-character templates
    charset    the single characters, one string; matching prefers earlier
               entries on ties, so lowercase comes first
    multi_texts  spellings aligned with m0, m1, ...
    heights    per-character tight-bbox height relative to cap height

Regenerating with the same font and Pillow version is byte-stable.
"""

from __future__ import annotations

import argparse
import string
import zlib
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

# Capital I is left out: after height normalisation it is the same vertical
# bar as lowercase l, so which one wins a match depends on compression noise.
# Always reading the bar as l keeps repeated renders of one screen agreeing.
CHARSET = (
    string.ascii_lowercase
    + string.ascii_uppercase.replace("I", "")
    + string.digits
)
LIGATURES = ("fi", "fl")
# Pairs that render as a single connected component somewhere in 14..28 px.
DIGRAPHS = (
    "ff", "ft", "fv", "fw", "fy",
    "kf", "kt", "kv", "ky", "kz",
    "rc", "re", "rf", "ro", "rt", "rv", "rw", "rx", "ry",
    "sz", "tf", "tt", "tv", "tw", "ty", "tz",
    "vf", "vt", "vv", "wf", "wt", "wv", "wy",
    "yf", "yt", "yv", "yy", "zf", "zt",
)
RENDER_SIZE = 96
MASK_HEIGHT = 32
DEFAULT_FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
DEFAULT_OUT = Path(__file__).resolve().parent.parent / "src" / "vidextract" / "data" / "glyphs.npz"


def render_mask(font: ImageFont.FreeTypeFont, text: str) -> np.ndarray:
    """Tight-cropped antialiased ink mask, height-normalized, uint8 0..255."""
    canvas = Image.new("L", (RENDER_SIZE * 4, RENDER_SIZE * 3), 255)
    ImageDraw.Draw(canvas).text((RENDER_SIZE, RENDER_SIZE), text, font=font, fill=0)
    ink = (255 - np.asarray(canvas, dtype=np.float32)) / 255.0
    rows = np.flatnonzero(ink.max(axis=1) > 0.02)
    cols = np.flatnonzero(ink.max(axis=0) > 0.02)
    if rows.size == 0:
        raise ValueError(f"glyph {text!r} rendered empty")
    tight = ink[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    height, width = tight.shape
    scaled_w = max(1, round(width * MASK_HEIGHT / height))
    resized = cv2.resize(tight, (scaled_w, MASK_HEIGHT), interpolation=cv2.INTER_AREA)
    return np.clip(resized * 255.0, 0, 255).round().astype(np.uint8)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--font", default=DEFAULT_FONT, help="TrueType font file to render")
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT, help="output .npz path")
    args = parser.parse_args()

    font = ImageFont.truetype(args.font, RENDER_SIZE)
    cap_canvas = Image.new("L", (RENDER_SIZE * 3, RENDER_SIZE * 3), 255)
    ImageDraw.Draw(cap_canvas).text((RENDER_SIZE, RENDER_SIZE), "X", font=font, fill=0)
    cap_ink = np.asarray(cap_canvas) < 128
    cap_rows = np.flatnonzero(cap_ink.any(axis=1))
    cap_height = float(cap_rows[-1] - cap_rows[0] + 1)

    arrays: dict[str, np.ndarray] = {}
    heights = np.zeros(len(CHARSET), dtype=np.float32)
    for i, ch in enumerate(CHARSET):
        canvas = Image.new("L", (RENDER_SIZE * 3, RENDER_SIZE * 3), 255)
        ImageDraw.Draw(canvas).text((RENDER_SIZE, RENDER_SIZE), ch, font=font, fill=0)
        ink = np.asarray(canvas) < 128
        rows = np.flatnonzero(ink.any(axis=1))
        heights[i] = (rows[-1] - rows[0] + 1) / cap_height
        arrays[f"g{ord(ch)}"] = render_mask(font, ch)

    multi = LIGATURES + DIGRAPHS
    for i, text in enumerate(multi):
        arrays[f"m{i}"] = render_mask(font, text)

    arrays["heights"] = heights
    arrays["charset"] = np.array(CHARSET)
    arrays["multi_texts"] = np.array(list(multi))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(args.out, **arrays)
    raw = args.out.read_bytes()
    print(
        f"wrote {args.out} ({len(raw)} bytes, crc32 {zlib.crc32(raw):08x}, "
        f"{len(CHARSET)} glyphs + {len(multi)} multi-char templates)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
