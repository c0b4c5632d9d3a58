import numpy as np
import pytest

from smootharap import InvalidParam, build_halfedge, make_test_mesh
from smootharap.generators import KINDS


def test_grid_plane_minimal():
    mesh = make_test_mesh("grid_plane", 2)
    assert mesh.num_vertices == 4
    assert mesh.num_triangles == 2


def test_unknown_kind():
    with pytest.raises(InvalidParam):
        make_test_mesh("torus", 5)


def test_bad_resolution():
    with pytest.raises(InvalidParam):
        make_test_mesh("grid_plane", 1)


def test_unknown_param_rejected():
    with pytest.raises(InvalidParam):
        make_test_mesh("bumpy_plane", 6, {"bumpiness": 3})


@pytest.mark.parametrize("kind", KINDS)
def test_generators_build_valid_halfedge(kind):
    mesh = make_test_mesh(kind, 6)
    hem = build_halfedge(mesh)  # raises on bad orientation / manifoldness
    assert hem.num_vertices == mesh.num_vertices


@pytest.mark.parametrize("kind", KINDS)
def test_determinism(kind):
    a = make_test_mesh(kind, 7, {"seed": 3} if kind.startswith("bumpy") else None)
    b = make_test_mesh(kind, 7, {"seed": 3} if kind.startswith("bumpy") else None)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.triangles, b.triangles)


def test_bumpy_seeds_differ():
    a = make_test_mesh("bumpy_plane", 8, {"seed": 1})
    b = make_test_mesh("bumpy_plane", 8, {"seed": 2})
    assert not np.array_equal(a.positions, b.positions)


def test_cylinder_boundary_only_at_caps():
    res = 8
    mesh = make_test_mesh("bumpy_cylinder", res)
    hem = build_halfedge(mesh)
    boundary = np.flatnonzero(hem.boundary_vertex)
    z = mesh.positions[:, 2]
    zmin, zmax = z.min(), z.max()
    caps = np.flatnonzero((np.isclose(z, zmin)) | (np.isclose(z, zmax)))
    assert set(boundary) == set(caps)
    assert len(boundary) == 2 * res


def test_bar_is_a_tube():
    mesh = make_test_mesh("bar", 4, {"length": 2.0, "width": 0.5})
    hem = build_halfedge(mesh)
    z = mesh.positions[:, 2]
    boundary = np.flatnonzero(hem.boundary_vertex)
    assert set(boundary) == set(
        np.flatnonzero(np.isclose(z, z.min()) | np.isclose(z, z.max()))
    )
    # cross-section stays inside the stated width
    assert np.abs(mesh.positions[:, :2]).max() == pytest.approx(0.25)


def test_spiky_plane_has_orthogonal_spikes():
    res = 13
    flat = make_test_mesh("grid_plane", res)
    spiky = make_test_mesh("spiky_plane", res, {"spike_height": 0.2})
    moved = np.flatnonzero(np.abs(spiky.positions[:, 2]) > 1e-12)
    assert len(moved) >= 4
    # spikes displace isolated vertices straight up, leaving neighbors flat
    assert np.array_equal(flat.positions[:, :2], spiky.positions[:, :2])
    hem = build_halfedge(spiky)
    for v in moved:
        assert np.abs(spiky.positions[hem.vertex_neighbors(v), 2]).max() <= 1e-12


def test_outward_orientation_cylinder():
    mesh = make_test_mesh("bumpy_cylinder", 10, {"num_bumps": 0})
    p = mesh.positions[mesh.triangles]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    centers = p.mean(axis=1)
    radial = centers.copy()
    radial[:, 2] = 0.0
    assert ((normals * radial).sum(axis=1) > 0).all()


def test_grid_orientation_up():
    mesh = make_test_mesh("grid_plane", 5)
    p = mesh.positions[mesh.triangles]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    assert (normals[:, 2] > 0).all()
