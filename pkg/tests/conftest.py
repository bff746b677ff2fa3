import pytest

from heckefarey.algring import ring_context_new


@pytest.fixture(params=[3, 5, 7])
def ctx(request):
    return ring_context_new(request.param)


@pytest.fixture
def ctx3():
    return ring_context_new(3)


@pytest.fixture
def ctx5():
    return ring_context_new(5)


@pytest.fixture
def ctx7():
    return ring_context_new(7)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
