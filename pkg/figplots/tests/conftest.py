import pytest

_RESULTS = []


@pytest.fixture
def criterion():
    def record(name, ok, detail=""):
        _RESULTS.append((name, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        status = "PASS" if ok else "FAIL"
        suffix = f" -- {detail}" if detail else ""
        terminalreporter.write_line(f"[{status}] {name}{suffix}")
