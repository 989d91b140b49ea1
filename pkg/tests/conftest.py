import numpy as np
import pytest

from snrqi.data import CrossSectionSet, GroupStructure, Material
from snrqi.geometry import BoundaryCondition, Mesh
from snrqi.problem import ProblemSpec


def two_group_xs(upscatter=0.0):
    return CrossSectionSet.from_arrays(
        [1.0, 1.5], [[0.3, upscatter], [0.5, 1.1]], [0.2, 0.8], [1.0, 0.0])


def small_spec(nx=2, ny=1, nz=1, upscatter=0.0, bc=None, order=4, widths=(0.7, 1.3)):
    """Two cells along x, two groups, reflecting on the low-x face."""
    bc = bc or BoundaryCondition("reflecting", "vacuum", "reflecting", "reflecting",
                                 "reflecting", "reflecting")
    dx = widths[:nx] if len(widths) >= nx else 1.0
    mesh = Mesh(nx, ny, nz, dx, 1.0, 1.0, "fuel")
    return ProblemSpec(mesh, bc, (Material("fuel", two_group_xs(upscatter)),),
                       GroupStructure(2), quadrature_order=order, name="small")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
