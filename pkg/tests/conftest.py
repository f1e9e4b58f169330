import pytest

from bigjump.geometry import make_any_exceed_set, make_halfspace_set
from bigjump.randsrc import MarginalLaw, VectorLaw

ACCEPTANCE_LINES = {}


@pytest.fixture
def halfspace():
    return make_halfspace_set([0.5, 0.5], 1.0)


@pytest.fixture
def any_exceed():
    return make_any_exceed_set([1.0, 1.0])


@pytest.fixture
def pareto2d():
    return VectorLaw.iid(MarginalLaw("pareto", alpha=1.5), 2)


@pytest.fixture
def expo2d():
    return VectorLaw.iid(MarginalLaw("exponential"), 2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
