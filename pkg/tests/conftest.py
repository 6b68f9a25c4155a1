import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one ``PASS/FAIL criterion N: ...`` line; returns ``ok`` for asserting."""
    def _report(n: int, ok: bool, msg: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {msg}"
        _LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
