"""The acceptance-criterion reporting hook."""

import pytest


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
