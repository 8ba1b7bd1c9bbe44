import numpy as np
import pytest

from eddymsfem import Material, ProblemSetup, ThicknessProfile, UniformField, build_rect_mesh
from eddymsfem.problem import MU0, Orders
from eddymsfem.reference import slab_benchmark


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def slab():
    return slab_benchmark(length=40e-3, ny=8)


def small_setup(nx=2, ny=2, orders=None, source=None, frequency=50.0, tags=None, size=1e-3):
    """Square sheet in a frame of air; handy for cheap structural tests."""
    def region(x, y):
        return "conductor" if 0.25 * size < x < 0.75 * size and 0.25 * size < y < 0.75 * size else "air"

    mesh = build_rect_mesh(size, size, 2 * nx, 2 * ny, region)
    return ProblemSetup(mesh, ThicknessProfile.from_fill_factor(0.5e-3, 0.95),
                        {"conductor": Material(2.08e6, 1000 * MU0), "air": Material(0.0, MU0)},
                        frequency, source or UniformField(300.0, 200.0), orders=orders or Orders())


@pytest.fixture
def small():
    return small_setup()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
