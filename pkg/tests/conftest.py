import numpy as np
import pytest

from navierlab import build_grid, make_problem
from navierlab.grid import DTYPE, PI, Field

N_DIM, P_EXP, R_EXP = 6, 2.1, 2.5

_acceptance = {}


@pytest.fixture(scope="session")
def g31():
    return build_grid(1, 1, 31, 31)


@pytest.fixture(scope="session")
def g63():
    return build_grid(1, 1, 63, 63)


def power_problem(grid, c, p=P_EXP):
    return make_problem(grid, N_DIM, p, R_EXP, lambda phi: Field(phi.grid, -DTYPE(c) * phi.values ** DTYPE(p)))


@pytest.fixture(scope="session")
def spec31(g31):
    return power_problem(g31, 0.05)


@pytest.fixture(scope="session")
def spec63(g63):
    return power_problem(g63, 0.05)


def sine_mode(grid, j=1, k=1):
    return Field.from_function(grid, lambda x, y: np.sin(j * PI * x / DTYPE(grid.a)) * np.sin(k * PI * y / DTYPE(grid.b)))


@pytest.fixture
def criterion(request):
    """Attach a one-line summary to the running acceptance test."""

    def record(detail):
        _acceptance[request.node.nodeid] = detail

    return record


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if "test_criterion_" in rep.nodeid and (rep.when == "call" or key != "passed"):
                outcomes[rep.nodeid] = "PASS" if key == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(outcomes, key=lambda n: int(n.rsplit("_", 1)[1])):
        number = nodeid.rsplit("_", 1)[1]
        terminalreporter.write_line(f"criterion {number}: {outcomes[nodeid]}  {_acceptance.get(nodeid, '')}")
