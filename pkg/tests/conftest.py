"""Shared pytest plumbing: the acceptance-criterion result banner.

Acceptance tests record exactly one line per criterion through the
``criterion`` fixture; the lines are replayed in a dedicated terminal
section after the run so each criterion's verdict is visible regardless
of output capturing.
"""

import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """Record a one-line [PASS]/[FAIL] verdict for an acceptance criterion."""

    def record(number: int, description: str, passed: bool, detail: str = ""):
        tag = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        _LINES[number] = f"[{tag}] criterion {number}: {description}{suffix}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
