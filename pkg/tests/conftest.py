import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[str] = []
_TABLES: list[tuple[str, str]] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, name: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name}"
        if detail:
            line += f" | {detail}"
        _LINES.append(line)
        print(line)

    return record


@pytest.fixture
def record_table():
    """Attach a text table to the end-of-run report."""

    def record(title: str, text: str) -> None:
        _TABLES.append((title, text))

    return record


def pytest_terminal_summary(terminalreporter):
    for title, text in _TABLES:
        terminalreporter.section(title)
        for line in text.splitlines():
            terminalreporter.write_line(line)
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
