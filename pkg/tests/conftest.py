"""Shared fixtures and the acceptance-line terminal report."""

from __future__ import annotations

import pytest

from cir_ldp import ProcessParams

#: One line per acceptance criterion, filled by tests/test_acceptance.py and
#: echoed verbatim in the terminal summary so the pass/fail status of every
#: criterion is visible regardless of output capturing.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(tag: str, passed: bool, detail: str) -> str:
    line = f"[{tag}] {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return line


@pytest.fixture(scope="session")
def params44() -> ProcessParams:
    return ProcessParams(4.0, -1.0)


@pytest.fixture(scope="session")
def regimes() -> list[ProcessParams]:
    return [
        ProcessParams(a, b)
        for a in (2.5, 3.0, 4.0, 6.0)
        for b in (-0.5, -1.0, -2.0)
    ]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
