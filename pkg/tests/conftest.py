import pytest

# one line per acceptance criterion, echoed in the terminal summary so it
# survives output capture
ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
