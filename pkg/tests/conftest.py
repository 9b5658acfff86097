from __future__ import annotations

import pytest

# criterion key -> {"title": str, "outcomes": [bool], "details": [str]}
_CRITERIA: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion checked by this test")


@pytest.fixture
def report(request):
    """Attach a one-line measurement to the criterion summary."""
    marker = request.node.get_closest_marker("criterion")
    if marker is None:
        return lambda text: None
    entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "outcomes": [], "details": []})
    return entry["details"].append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "outcomes": [], "details": []})
        entry["outcomes"].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, entry in _CRITERIA.items():
        ok = bool(entry["outcomes"]) and all(entry["outcomes"])
        line = f"{'PASS' if ok else 'FAIL'}  {key:<22} {entry['title']}"
        if entry["details"]:
            line += "  [" + "; ".join(entry["details"]) + "]"
        tr.write_line(line)
