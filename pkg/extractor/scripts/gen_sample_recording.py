"""Render the bundled sample screen recording.

The clip fakes ten seconds of a small payments app at 12 fps: a wallet home
screen, a transfer form, a payment-failure dialog, a blank splash, and a
return to the home screen.  A pointer dot drifts across the first three
screens so consecutive frames are not byte-identical, while the splash frames
are deliberately featureless so some sampled frames carry no text regions at
all.  Rerun the script to rewrite extractor/data/sample_recording.avi.
"""

from __future__ import annotations

import argparse
import zlib
from pathlib import Path

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

WIDTH, HEIGHT = 360, 640
FPS = 12
FONT_FILE = Path("/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf")
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "data" / "sample_recording.avi"

BG = (247, 248, 250)
HEADER = (63, 81, 181)
CARD = (255, 255, 255)
ACCENT = (233, 30, 99)
INK = (33, 33, 33)
MUTED = (97, 97, 97)
ERROR = (211, 47, 47)


def _font(size: int) -> ImageFont.FreeTypeFont:
    return ImageFont.truetype(str(FONT_FILE), size)


def screen_home() -> Image.Image:
    img = Image.new("RGB", (WIDTH, HEIGHT), BG)
    d = ImageDraw.Draw(img)
    d.rectangle([0, 0, WIDTH, 88], fill=HEADER)
    d.text((24, 22), "Wallet", font=_font(46), fill=(255, 255, 255))
    d.rounded_rectangle([16, 112, WIDTH - 16, 232], radius=12, fill=CARD)
    d.text((36, 128), "Balance", font=_font(16), fill=MUTED)
    d.text((36, 156), "$1,284.50", font=_font(42), fill=INK)
    d.text((24, 264), "Recent activity", font=_font(18), fill=INK)
    rows = [
        ("Coffee shop", "-$4.50"),
        ("Grocery store", "-$32.18"),
        ("Refund", "+$12.00"),
        ("Monthly rent", "-$940.00"),
    ]
    y = 304
    for label, amount in rows:
        d.rounded_rectangle([16, y, WIDTH - 16, y + 52], radius=8, fill=CARD)
        d.text((32, y + 16), label, font=_font(17), fill=INK)
        d.text((WIDTH - 110, y + 16), amount, font=_font(17), fill=MUTED)
        y += 64
    return img


def screen_send() -> Image.Image:
    img = Image.new("RGB", (WIDTH, HEIGHT), BG)
    d = ImageDraw.Draw(img)
    d.rectangle([0, 0, WIDTH, 88], fill=HEADER)
    d.text((24, 26), "Send money", font=_font(38), fill=(255, 255, 255))
    fields = [("Recipient", "alex@example.com"), ("Amount", "75.00"), ("Note", "rent split")]
    y = 140
    for label, value in fields:
        d.text((24, y), label, font=_font(17), fill=MUTED)
        d.rounded_rectangle([24, y + 26, WIDTH - 24, y + 70], radius=8, fill=CARD)
        d.text((38, y + 38), value, font=_font(18), fill=INK)
        y += 104
    d.rounded_rectangle([24, 480, WIDTH - 24, 536], radius=10, fill=ACCENT)
    d.text((150, 494), "Send", font=_font(22), fill=(255, 255, 255))
    return img


def screen_error() -> Image.Image:
    img = Image.new("RGB", (WIDTH, HEIGHT), (225, 226, 230))
    d = ImageDraw.Draw(img)
    d.rounded_rectangle([20, 200, WIDTH - 20, 430], radius=14, fill=CARD)
    d.text((44, 232), "Payment failed", font=_font(36), fill=ERROR)
    d.text((44, 300), "The card was declined.", font=_font(17), fill=INK)
    d.text((44, 328), "No money has been moved.", font=_font(17), fill=MUTED)
    d.rounded_rectangle([44, 368, 180, 408], radius=8, fill=HEADER)
    d.text((80, 378), "Retry", font=_font(18), fill=(255, 255, 255))
    return img


def screen_splash() -> Image.Image:
    return Image.new("RGB", (WIDTH, HEIGHT), HEADER)


def _with_cursor(base: Image.Image, x: int, y: int) -> Image.Image:
    img = base.copy()
    d = ImageDraw.Draw(img)
    d.ellipse([x - 7, y - 7, x + 7, y + 7], fill=(120, 124, 133))
    return img


def build_frames() -> list[Image.Image]:
    home, send, error, splash = screen_home(), screen_send(), screen_error(), screen_splash()
    frames: list[Image.Image] = []
    for i in range(36):  # browsing the home screen
        frames.append(_with_cursor(home, 60 + 6 * i, 320 + 4 * i))
    for i in range(36):  # filling the transfer form
        frames.append(_with_cursor(send, 300 - 5 * i, 170 + 9 * i))
    for i in range(24):  # staring at the failure dialog
        frames.append(_with_cursor(error, 100 + 4 * i, 390))
    for _ in range(12):  # app relaunch splash, no chrome at all
        frames.append(splash)
    for _ in range(12):  # back on the home screen, pointer parked
        frames.append(_with_cursor(home, 180, 560))
    return frames


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    parser.add_argument("--quality", type=int, default=85, help="MJPG quality 0..100")
    args = parser.parse_args()

    frames = build_frames()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    writer = cv2.VideoWriter(
        str(args.out), cv2.VideoWriter_fourcc(*"MJPG"), FPS, (WIDTH, HEIGHT)
    )
    writer.set(cv2.VIDEOWRITER_PROP_QUALITY, args.quality)
    try:
        for frame in frames:
            writer.write(cv2.cvtColor(np.asarray(frame), cv2.COLOR_RGB2BGR))
    finally:
        writer.release()

    blob = args.out.read_bytes()
    print(f"{args.out}: {len(frames)} frames, {len(blob)} bytes, crc32 {zlib.crc32(blob):08x}")


if __name__ == "__main__":
    main()
