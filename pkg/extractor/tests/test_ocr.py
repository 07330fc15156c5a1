"""Text-region detection and glyph recognition on rendered frames.

Every expected string below was chosen so that a correct implementation
reads it back exactly; the renderings use the same font family the
recognizer's templates come from, as screen recordings of a UI would.
"""

import numpy as np
import pytest

from framegen import render_text_frame

from vidextract.config import ExtractorConfig
from vidextract.ocr import GlyphRecognizer, detect_regions, extract_frame_text


def blank_frame(size=(360, 240), value=246):
    return np.full((size[1], size[0], 3), value, dtype=np.uint8)


class TestDetectRegions:
    def test_blank_frame_has_no_regions(self):
        assert detect_regions(blank_frame(), 25) == []

    def test_finds_one_region_per_text_line(self):
        frame = render_text_frame([("Settings", 22)])
        regions = detect_regions(frame, 25)
        assert len(regions) == 1
        x, y, w, h = regions[0]
        assert w > h, "a text line should be wider than tall"
        assert 10 <= h <= 40

    def test_boxes_stay_inside_the_frame(self):
        frame = render_text_frame([("Network error", 30), ("retry", 12)])
        for x, y, w, h in detect_regions(frame, 25):
            assert x >= 0 and y >= 0
            assert x + w <= frame.shape[1]
            assert y + h <= frame.shape[0]
            assert w * h >= 25

    def test_coarser_filters_keep_a_subset(self):
        frame = render_text_frame([("Payment failed", 40), ("Retry now", 22), ("hint", 11)])
        fine = detect_regions(frame, 25)
        mid = detect_regions(frame, 800)
        coarse = detect_regions(frame, 3200)
        assert set(coarse) <= set(mid) <= set(fine)
        assert len(fine) >= 3
        assert all(w * h >= 800 for _, _, w, h in mid)
        assert all(w * h >= 3200 for _, _, w, h in coarse)

    def test_small_region_kept_only_by_the_fine_filter(self):
        """A roughly 20x10 px text blob survives 5x5 but not the coarser filters."""
        frame = render_text_frame([("goo", 11)])
        fine = detect_regions(frame, 25)
        assert len(fine) == 1
        _, _, w, h = fine[0]
        assert 12 <= w <= 30 and 6 <= h <= 14
        assert 25 <= w * h < 800
        assert detect_regions(frame, 800) == []
        assert detect_regions(frame, 3200) == []


class TestRecognize:
    @pytest.mark.parametrize(
        "text",
        [
            "cart",
            "Profile",
            "Checkout",
            "Payment failed",
            "Add to cart",
            "Settings",
            "network error",
        ],
    )
    def test_reads_rendered_words_exactly(self, recognizer, text):
        frame = render_text_frame([(text, 22)])
        regions = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)
        assert len(regions) == 1
        assert regions[0].text == text

    @pytest.mark.parametrize("text", ["Checkout", "network error", "Add to cart"])
    def test_case_folded_reads_at_other_sizes(self, recognizer, text):
        for px in (18, 28, 34):
            frame = render_text_frame([(text, px)])
            regions = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)
            assert len(regions) == 1
            assert regions[0].text.casefold() == text.casefold(), f"at {px} px"

    def test_punctuation_reads_as_word_break(self, recognizer):
        frame = render_text_frame([("v1.2", 22)])
        regions = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)
        assert regions[0].text == "v1 2"

    def test_confidence_is_rounded_and_in_range(self, recognizer):
        frame = render_text_frame([("Checkout", 22)])
        region = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)[0]
        assert 0.0 < region.conf <= 1.0
        assert region.conf == round(region.conf, 4)

    def test_blank_crop_reads_empty(self, recognizer):
        assert recognizer.recognize(np.full((24, 60), 250, dtype=np.uint8)) == ("", 0.0)
        assert recognizer.recognize(np.zeros((1, 1), dtype=np.uint8)) == ("", 0.0)

    def test_two_instances_agree(self, recognizer):
        frame = render_text_frame([("Forgot password", 22)])
        fresh = GlyphRecognizer()
        cfg = ExtractorConfig(min_region=(5, 5))
        assert extract_frame_text(frame, cfg, recognizer) == extract_frame_text(
            frame, cfg, fresh
        )

    def test_missing_atlas_raises(self, tmp_path):
        with pytest.raises(OSError):
            GlyphRecognizer(tmp_path / "missing.npz")


class TestExtractFrameText:
    def test_config_filter_applies(self, recognizer):
        frame = render_text_frame([("Update available", 40), ("fine print", 12)], size=(520, 240))
        coarse = extract_frame_text(frame, ExtractorConfig(min_region=(80, 40)), recognizer)
        fine = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)
        assert {r.text.casefold() for r in coarse} == {"update", "available"}
        assert all(r.w * r.h >= 3200 for r in coarse)
        assert set(coarse) <= set(fine)
        assert {r.text.casefold() for r in fine} == {"update", "available", "fine print"}

    def test_blank_frame_yields_no_regions(self, recognizer):
        assert extract_frame_text(blank_frame(), ExtractorConfig(), recognizer) == ()

    def test_regions_carry_geometry(self, recognizer):
        frame = render_text_frame([("Sign in", 26)])
        (region,) = extract_frame_text(frame, ExtractorConfig(min_region=(5, 5)), recognizer)
        crop = frame[region.y : region.y + region.h, region.x : region.x + region.w]
        assert crop.min() < 100, "the reported box should contain the dark glyphs"
        outside = frame[region.y + region.h + 4 :, :]
        assert outside.size == 0 or outside.min() > 200, "nothing below the only line"
