import sys

import numpy as np
import pytest

from smootharap import TriangleMesh, build_halfedge, make_test_mesh


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the test run."""
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None) if module else None
    if verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in verdicts:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def single_triangle():
    return TriangleMesh(
        positions=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        triangles=np.array([[0, 1, 2]]),
    )


@pytest.fixture
def two_triangles():
    """Two triangles sharing the edge (0, 2)."""
    return TriangleMesh(
        positions=np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
        ),
        triangles=np.array([[0, 1, 2], [0, 2, 3]]),
    )


@pytest.fixture
def tetrahedron():
    return TriangleMesh(
        positions=np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        ),
        triangles=np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]),
    )


@pytest.fixture
def grid10():
    return make_test_mesh("grid_plane", 10)


@pytest.fixture
def bumpy():
    return make_test_mesh("bumpy_plane", 14)


@pytest.fixture
def bumpy_hem(bumpy):
    return build_halfedge(bumpy)


def wiggle(mesh: TriangleMesh, rng, scale=0.05) -> np.ndarray:
    """Random smooth-ish perturbation of the positions (returns a copy)."""
    out = mesh.positions.copy()
    out += scale * mesh.bbox_diagonal * rng.standard_normal(out.shape) / 10.0
    return out
