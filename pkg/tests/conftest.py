import pytest

from elasticrods.closure import KnotSpec, solve_knot
from elasticrods.homotopy import trace_level

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def family_1_2():
    return trace_level(1, 2)


@pytest.fixture(scope="session")
def knots():
    return {(m, n): solve_knot(KnotSpec(m, n)) for m, n in ((1, 2), (1, 3), (2, 3))}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
