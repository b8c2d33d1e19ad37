import pytest

from softrgg.checks import Runs

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def runs():
    return Runs(workers=1)


@pytest.fixture
def report():
    def record(result):
        line = result.line()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return result

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
