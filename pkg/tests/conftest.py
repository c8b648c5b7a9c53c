import pytest

CRITERION_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    def record(res):
        CRITERION_LINES[res.number] = res.line()
        print(res.line())
        return res

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for i in sorted(CRITERION_LINES):
            terminalreporter.write_line(CRITERION_LINES[i])
