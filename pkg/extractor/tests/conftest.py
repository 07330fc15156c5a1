"""Shared fixtures and the acceptance-criterion reporting hook."""

from pathlib import Path

import pytest

from framegen import write_video

SAMPLE_RECORDING = Path(__file__).resolve().parents[1] / "data" / "sample_recording.avi"


@pytest.fixture(scope="session")
def sample_video() -> Path:
    assert SAMPLE_RECORDING.is_file(), f"missing bundled clip {SAMPLE_RECORDING}"
    return SAMPLE_RECORDING


@pytest.fixture
def make_video(tmp_path):
    """Factory writing a throwaway clip from RGB frames; returns its path."""
    counter = iter(range(1000))

    def factory(frames, fps: int = 12) -> Path:
        return write_video(tmp_path / f"clip{next(counter)}.avi", frames, fps=fps)

    return factory


@pytest.fixture(scope="session")
def recognizer():
    from vidextract.ocr import GlyphRecognizer

    return GlyphRecognizer()


@pytest.fixture(scope="session")
def small_embedder():
    """Backbone at its smallest legal input size; init cost paid once."""
    from vidextract.config import ExtractorConfig
    from vidextract.embed import FrameEmbedder

    return FrameEmbedder(ExtractorConfig(resize=(32, 32)))


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name): top-level acceptance criterion; result printed per criterion",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.kwargs.get("name") or (marker.args[0] if marker.args else item.name)
    status = "PASS" if report.passed else "FAIL"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(f"[ACCEPTANCE] {name}: {status}")
