import numpy as np
import pytest

from smootharap import (
    InvalidParam,
    RotationField,
    TriangleMesh,
    assemble_laplacian,
    build_context,
    build_halfedge,
    energy_arap,
    energy_smooth,
    energy_total,
    laplacian_vector,
    make_test_mesh,
)
from smootharap.engine import _energies, _rhs_and_parts

from oracles import law_of_cosines_cot, random_rotation
from test_kernels import batch_random_rotations


@pytest.fixture(scope="module")
def setup():
    hem = build_halfedge(make_test_mesh("bumpy_plane", 7))
    ops = assemble_laplacian(hem)
    return hem, ops


def test_zero_at_rest_with_identity(setup):
    hem, ops = setup
    R = RotationField.identity(hem.num_vertices)
    assert energy_arap(hem, ops, hem.positions, R) == pytest.approx(0.0, abs=1e-14)
    assert energy_smooth(hem, ops, hem.positions, R) == pytest.approx(0.0, abs=1e-14)


def test_zero_under_rigid_motion(setup, rng):
    hem, ops = setup
    Q = random_rotation(rng)
    moved = hem.positions @ Q.T + np.array([0.4, -1.0, 2.0])
    R = RotationField(np.broadcast_to(Q, (hem.num_vertices, 3, 3)).copy())
    scale = hem.mesh.bbox_diagonal ** 2
    assert abs(energy_arap(hem, ops, moved, R)) <= 1e-10 * scale
    assert abs(energy_smooth(hem, ops, moved, R)) <= 1e-10 * scale


def test_nonnegative_and_finite(setup, rng):
    hem, ops = setup
    for _ in range(5):
        pos = hem.positions + 0.3 * rng.standard_normal(hem.positions.shape)
        R = batch_random_rotations(hem.num_vertices, rng)
        ea = energy_arap(hem, ops, pos, R)
        es = energy_smooth(hem, ops, pos, R)
        assert ea >= 0.0 and np.isfinite(ea)
        assert es >= 0.0 and np.isfinite(es)


def test_single_triangle_hand_summation():
    """One displaced vertex of an equilateral triangle, identity rotations:
    the energy is three copies (one per corner neighborhood) of the plain
    per-edge sum with weights w/6."""
    rest = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3) / 2, 0.0]])
    tri = np.array([[0, 1, 2]])
    hem = build_halfedge(TriangleMesh(rest, tri))
    ops = assemble_laplacian(hem)
    offset = np.array([0.05, -0.02, 0.11])
    deformed = rest.copy()
    deformed[1] += offset

    expected = 0.0
    for k in range(3):
        a, b = k, (k + 1) % 3
        c = 3 - a - b
        # cotan weight: angle at the corner opposite the edge (a, b)
        w = law_of_cosines_cot(
            np.linalg.norm(rest[a] - rest[c]),
            np.linalg.norm(rest[b] - rest[c]),
            np.linalg.norm(rest[a] - rest[b]),
        )
        e_rest = rest[b] - rest[a]
        e_cur = deformed[b] - deformed[a]
        d = e_cur - e_rest
        expected += 3.0 * (w / 6.0) * float(d @ d)

    got = energy_arap(hem, ops, deformed, RotationField.identity(3))
    assert got == pytest.approx(expected, rel=1e-12)


def test_smooth_vertex_loop_equals_matrix_form(setup, rng):
    """The definitional per-vertex sum (direct Laplacian-vector recomputation)
    agrees with the assembled-operator evaluation."""
    hem, ops = setup
    pos = hem.positions + 0.2 * rng.standard_normal(hem.positions.shape)
    R = batch_random_rotations(hem.num_vertices, rng)
    by_loop = 0.0
    for v in range(hem.num_vertices):
        ell_rest = laplacian_vector(hem, hem.positions, v)
        ell_cur = laplacian_vector(hem, pos, v)
        d = ell_cur - R[v] @ ell_rest
        by_loop += ops.areas[v] * float(d @ d)
    by_matrix = energy_smooth(hem, ops, pos, R)
    assert by_matrix == pytest.approx(by_loop, rel=1e-10)


def test_quadratic_identity_matches_definitions(setup, rng):
    """The solver's fast per-iteration energies are an algebraic expansion of
    the definitional sums; both must agree to round-off."""
    hem, ops = setup
    for lam in (0.0, 0.5, 0.95):
        ctx = build_context(hem, ops, lam)
        pos = hem.positions + 0.15 * rng.standard_normal(hem.positions.shape)
        R = RotationField(batch_random_rotations(hem.num_vertices, rng))
        _, b_arap, rotated_ell = _rhs_and_parts(ctx, R)
        e_total, e_arap, e_smooth = _energies(ctx, pos, b_arap, rotated_ell)
        ea = energy_arap(hem, ops, pos, R)
        es = energy_smooth(hem, ops, pos, R)
        assert e_arap == pytest.approx(ea, rel=1e-10)
        assert e_smooth == pytest.approx(es, rel=1e-10)
        assert e_total == pytest.approx(energy_total(lam, ea, es), rel=1e-10)


def test_energy_total_blend():
    assert energy_total(0.0, 3.0, 7.0) == 3.0
    assert energy_total(0.5, 3.0, 7.0) == pytest.approx(5.0)
    assert energy_total(0.95, 2.0, 4.0) == pytest.approx(0.05 * 2.0 + 0.95 * 4.0)
    with pytest.raises(InvalidParam):
        energy_total(1.0, 1.0, 1.0)


def test_rejects_wrong_rotation_count(setup):
    hem, ops = setup
    with pytest.raises(InvalidParam):
        energy_arap(hem, ops, hem.positions, np.broadcast_to(np.eye(3), (4, 3, 3)))
