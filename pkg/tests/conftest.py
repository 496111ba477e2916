import pytest

_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record a named acceptance criterion outcome for the final summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _RESULTS.append((name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
