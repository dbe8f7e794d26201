"""Shared pytest wiring.

The acceptance suite tags each test with a numbered criterion; this hook
prints one pass/fail line per criterion in the terminal summary so the
overall gate is readable at a glance.
"""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or report.when != "call":
        return
    num, slug = int(m.group(1)), m.group(2)
    _results[num] = (slug, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        slug, outcome = _results[num]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(
            f"criterion {num:02d} [{slug}]: {status}")
