import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(n: int, ok: bool, detail: str) -> bool:
        _LINES[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
