import pytest

from tausheaf.valued_field import ValuedField


@pytest.fixture
def F2():
    return ValuedField(2, prec=32)


@pytest.fixture
def F3():
    return ValuedField(3, prec=24)


@pytest.fixture
def F4():
    """q = 2 with coefficients in F_4."""
    return ValuedField(2, m=2, prec=32)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in list(sys.modules.items())
                if name.endswith("test_acceptance") and hasattr(m, "summary_lines")), None)
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
