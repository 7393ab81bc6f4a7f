"""Per-criterion summary for the acceptance suite.

Acceptance tests are named test_c<N>_...; after a run that included any of
them, one PASS/FAIL line per criterion is printed so the gate can be read
at a glance.
"""

import re
from collections import defaultdict

CRITERIA_TITLES = {
    1: "MV utility table",
    2: "MV convergence table",
    3: "SDG table",
    4: "minimax values",
    5: "stationary-opponent rate",
    6: "cloning bound and fast-switching floor",
    7: "adaptive-learner scaling",
    8: "population pooling bound",
    9: "structural invariants",
    10: "reproduction determinism",
}

_PATTERN = re.compile(r"test_c(\d+)[_\b]")


def pytest_terminal_summary(terminalreporter):
    outcomes = defaultdict(set)
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            m = _PATTERN.search(report.nodeid)
            if m and "test_acceptance" in report.nodeid:
                outcomes[int(m.group(1))].add(status)
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(outcomes):
        verdict = "PASS" if outcomes[num] == {"passed"} else "FAIL"
        title = CRITERIA_TITLES.get(num, "")
        terminalreporter.write_line(f"criterion {num:2d} ({title}): {verdict}")
