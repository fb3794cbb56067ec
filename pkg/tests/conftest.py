import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number, passed, text):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
