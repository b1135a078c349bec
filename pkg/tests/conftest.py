import pytest

CRITERIA_LINES: list[str] = []


@pytest.fixture
def record():
    def _record(number, name, passed, detail=""):
        CRITERIA_LINES.append(f"{'PASS' if passed else 'FAIL'} criterion {number} ({name}): {detail}")
        print(CRITERIA_LINES[-1])
    return _record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
