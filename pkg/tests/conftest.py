import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reins import ModelBundle  # noqa: E402

_CRITERIA: dict[str, str] = {}
_NOTES: dict[str, list[str]] = {}


@pytest.fixture(scope="session")
def baseline():
    return ModelBundle()


@pytest.fixture
def criterion_log(request):
    """Append lines that are printed under the test's criterion in the summary."""
    marker = request.node.get_closest_marker("criterion")
    lines = _NOTES.setdefault(marker.args[0] if marker else request.node.name, [])
    lines.clear()
    return lines.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[label] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        terminalreporter.write_line(f"[{_CRITERIA[label]}] criterion {label}")
        for line in _NOTES.get(label, []):
            terminalreporter.write_line(f"    {line}")
