"""Echo the acceptance suite's verdict lines after the run.

pytest captures file descriptors during tests, so the per-criterion
PASS/FAIL lines printed by test_acceptance.py would only surface for
failing tests.  This hook repeats them in the terminal summary, which is
written outside capture.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
