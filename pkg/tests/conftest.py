import pytest

from eqsrc.equilibrium import build_equilibrium
from eqsrc.field import FieldSpec
from eqsrc.jmap import new_map

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def quad_field():
    return FieldSpec.quadratic(1.0)


@pytest.fixture(scope="session")
def quad_eq(quad_field):
    return build_equilibrium(quad_field)


@pytest.fixture(scope="session")
def quartic0_eq():
    return build_equilibrium(FieldSpec.quartic(0.0))


@pytest.fixture(scope="session")
def unit_map():
    return new_map(1.0, 0.5)


@pytest.fixture
def record():
    """Append a one-line acceptance verdict; all lines are repeated in the summary."""
    def _record(line):
        print(line)
        ACCEPTANCE_LINES.append(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
