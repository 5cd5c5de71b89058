"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

from collections import defaultdict

import pytest

_outcomes: dict = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            state = "FAIL (expected; see decisions ledger)" if report.skipped else "PASS (unexpectedly)"
        else:
            state = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _outcomes[mark.args[0]].append(state)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        states = _outcomes[n]
        worst = next((s for s in states if not s.startswith("PASS")), "PASS")
        terminalreporter.write_line(f"Criterion {n}: {worst}")
