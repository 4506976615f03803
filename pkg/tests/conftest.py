import pytest

ACCEPTANCE = []


def record(name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((name, ok, detail))


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
