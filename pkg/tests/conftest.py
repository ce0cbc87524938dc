import numpy as np
import pytest

from lamegap.decomposition import decompose, solve_auxiliary
from lamegap.fem import DofMap, assemble_stiffness
from lamegap.geometry import BoundaryData, MaterialParams, disk_configuration
from lamegap.mesh import GradingSpec, build_gap_mesh

# small meshes for unit tests; the acceptance module builds its own
COARSE = GradingSpec(n_layers=6, far_h=0.25, boundary_angle=0.3, aspect=3.0)


@pytest.fixture(scope="session")
def mat():
    return MaterialParams(1.0, 1.0)


@pytest.fixture(scope="session")
def geom():
    return disk_configuration(1.0, 0.3, 0.04)


@pytest.fixture(scope="session")
def coarse_mesh(geom):
    return build_gap_mesh(geom, COARSE)


@pytest.fixture(scope="session")
def coarse_dofs(coarse_mesh):
    return DofMap(coarse_mesh)


@pytest.fixture(scope="session")
def coarse_K(coarse_dofs, mat):
    return assemble_stiffness(coarse_dofs, mat)


@pytest.fixture(scope="session")
def shear():
    return BoundaryData.preset("vertical_shear")


@pytest.fixture(scope="session")
def coarse_aux(coarse_mesh, coarse_dofs, mat, geom, shear, coarse_K):
    return solve_auxiliary(coarse_mesh, coarse_dofs, mat, geom, shear,
                           K=coarse_K)


@pytest.fixture(scope="session")
def coarse_result(coarse_mesh, mat, geom, shear):
    return decompose(coarse_mesh, mat, geom, shear)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
