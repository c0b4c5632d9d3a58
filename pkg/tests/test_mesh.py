import numpy as np
import pytest

from smootharap import (
    InconsistentOrientation,
    InvalidParam,
    NonManifold,
    TriangleMesh,
    build_halfedge,
    k_ring,
    make_test_mesh,
    spokes_and_rims,
)

from oracles import neighborhood_halfedges


def test_triangle_mesh_rejects_out_of_range_index():
    with pytest.raises(InvalidParam):
        TriangleMesh(positions=np.zeros((3, 3)), triangles=np.array([[0, 1, 3]]))


def test_triangle_mesh_rejects_repeated_vertex():
    with pytest.raises(InvalidParam):
        TriangleMesh(positions=np.zeros((3, 3)), triangles=np.array([[0, 1, 1]]))


def test_single_triangle_halfedges(single_triangle):
    hem = build_halfedge(single_triangle)
    assert hem.num_halfedges == 3
    assert (hem.twin == -1).all()
    assert hem.boundary_vertex.all()


def test_two_triangles_shared_edge(two_triangles):
    hem = build_halfedge(two_triangles)
    interior = np.flatnonzero(hem.twin >= 0)
    assert len(interior) == 2  # the shared edge, once per direction
    assert (hem.twin == -1).sum() == 4
    h = interior[0]
    assert {int(hem.origin[h]), int(hem.target[h])} == {0, 2}


def test_tetrahedron_closed(tetrahedron):
    hem = build_halfedge(tetrahedron)
    assert hem.num_halfedges == 12
    assert (hem.twin >= 0).all()
    assert not hem.boundary_vertex.any()


def test_halfedge_involution_and_cycles():
    for kind, res in [("grid_plane", 6), ("bumpy_plane", 9), ("bumpy_cylinder", 8), ("bar", 4)]:
        hem = build_halfedge(make_test_mesh(kind, res))
        h = np.arange(hem.num_halfedges)
        nxt = hem.next_halfedge
        assert (nxt[nxt[nxt]] == h).all(), kind
        interior = hem.twin >= 0
        assert (hem.twin[hem.twin[interior]] == h[interior]).all(), kind
        # twins run opposite directions
        assert (hem.origin[hem.twin[interior]] == hem.target[interior]).all(), kind
        # circulation covers every incident face exactly once
        tri = hem.triangles
        for v in [0, hem.num_vertices // 2, hem.num_vertices - 1]:
            fan = set(int(f) for f in hem.vertex_triangles(v))
            brute = set(f for f in range(len(tri)) if v in tri[f])
            assert fan == brute, kind


def test_same_direction_edge_rejected():
    mesh_args = dict(
        positions=np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
        ),
        # second face flipped: traverses 0->2 in the same direction as the first
        triangles=np.array([[0, 1, 2], [0, 2, 3]]),
    )
    good = TriangleMesh(**mesh_args)
    build_halfedge(good)
    bad = TriangleMesh(
        positions=mesh_args["positions"], triangles=np.array([[0, 1, 2], [2, 0, 3]])
    )
    with pytest.raises(InconsistentOrientation):
        build_halfedge(bad)


def test_overstuffed_edge_rejected():
    positions = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]
    )
    triangles = np.array([[0, 1, 2], [1, 0, 3], [1, 0, 4]])  # edge {0,1} on 3 faces
    with pytest.raises(NonManifold):
        build_halfedge(TriangleMesh(positions=positions, triangles=triangles))


def test_bowtie_vertex_rejected():
    # two fans meeting only at vertex 0
    positions = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [-1.0, -1.0, 0.0],
        ]
    )
    triangles = np.array([[0, 1, 2], [0, 3, 4]])
    with pytest.raises(NonManifold):
        build_halfedge(TriangleMesh(positions=positions, triangles=triangles))


def test_spokes_and_rims_counts(grid10):
    hem = build_halfedge(grid10)
    interior = np.flatnonzero(~hem.boundary_vertex)
    v = int(interior[0])
    ring = spokes_and_rims(hem, v)
    # valence-6 interior grid vertex: 6 triangles, 18 half-edges, 12 touch v
    assert len(ring) == 18
    touching = sum(1 for h in ring if v in (hem.origin[h], hem.target[h]))
    assert touching == 12
    # spokes appear once per direction
    directed = [(int(hem.origin[h]), int(hem.target[h])) for h in ring]
    assert len(set(directed)) == len(directed)
    spokes = [d for d in directed if v in d]
    undirected = {tuple(sorted(d)) for d in spokes}
    assert len(spokes) == 2 * len(undirected)


def test_spokes_and_rims_single_triangle(single_triangle):
    hem = build_halfedge(single_triangle)
    assert sorted(spokes_and_rims(hem, 0)) == [0, 1, 2]


def test_spokes_and_rims_matches_bruteforce(bumpy_hem, rng):
    hem = bumpy_hem
    tri = hem.triangles
    for v in rng.choice(hem.num_vertices, size=8, replace=False):
        got = {
            (int(hem.origin[h]), int(hem.target[h]), int(h // 3)) for h in spokes_and_rims(hem, v)
        }
        want = {(a, b, f) for (a, b, f, _k) in neighborhood_halfedges(tri, int(v))}
        assert got == want


def test_k_ring(grid10):
    hem = build_halfedge(grid10)
    v = 5 * 10 + 5
    one = set(k_ring(hem, v, 1))
    assert one == {int(u) for u in hem.vertex_neighbors(v)}
    two = set(k_ring(hem, v, 2))
    assert one < two
    assert v not in two
    brute_two = set()
    for u in one:
        brute_two |= {int(w) for w in hem.vertex_neighbors(u)}
    brute_two |= one
    brute_two.discard(v)
    assert two == brute_two
