"""Shared pytest wiring.

test_acceptance records one PASS/FAIL line per headline criterion;
default output capture would hide them for passing tests, so echo the
collected lines in the terminal summary instead.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
