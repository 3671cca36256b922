import pytest

_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "seconds": 0.0})
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["passed"] = False
    if call.when == "call":
        entry["seconds"] += call.duration


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran in this session."""
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {number:2d} {verdict}  {entry['title']}  ({entry['seconds']:.1f} s)")
