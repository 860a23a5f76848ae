import pytest

from cournot_delay.model import ModelParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def baseline10():
    return ModelParams(mu=10.0)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
