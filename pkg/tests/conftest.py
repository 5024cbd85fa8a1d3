"""Per-criterion summary for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(n, "title")`` are grouped and reported
as one PASS/FAIL line per criterion at the end of the run.
"""
from collections import defaultdict

import pytest

_criteria = {}
_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker:
            number, title = marker.args
            _criteria[item.nodeid] = (number, title)


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[_criteria[report.nodeid]].append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), results in sorted(_outcomes.items()):
        passed = sum(outcome == "passed" for _, outcome in results)
        status = "PASS" if passed == len(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {title}  ({passed}/{len(results)} cases)")
        for nodeid, outcome in results:
            if outcome != "passed":
                terminalreporter.write_line(f"    failed: {nodeid.split('::')[-1]}")
