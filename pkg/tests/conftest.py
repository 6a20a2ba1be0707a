import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are printed in the terminal summary."""

    def add(line):
        _LINES.append(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
