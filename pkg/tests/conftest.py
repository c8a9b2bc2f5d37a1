import pytest

from tetraspin.scalars import make_params

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def P():
    return make_params(0.4, 0.3, 0.2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
