"""Shared pytest hooks.

Tests tagged ``@pytest.mark.criterion(n)`` are tallied per criterion and a
``criterion n: PASS|FAIL`` line is printed for each at the end of the run.
"""

import pytest

_OUTCOMES: dict[int, list[bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number = int(marker.args[0])
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _OUTCOMES.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        verdict = "PASS" if all(_OUTCOMES[number]) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}")
