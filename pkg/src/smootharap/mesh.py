"""Triangle meshes and half-edge connectivity.

A :class:`TriangleMesh` is a plain indexed triangle soup with validation.
:func:`build_halfedge` upgrades it to a :class:`HalfEdgeMesh`, rejecting
non-manifold or inconsistently oriented input.

Half-edge indexing convention
-----------------------------
Half-edge ``h`` lives in triangle ``h // 3`` at corner ``k = h % 3`` and runs
from vertex ``triangles[f, k]`` to ``triangles[f, (k + 1) % 3]``.  The three
half-edges of a triangle are therefore consecutive and counterclockwise, and
``next(h) == 3 * (h // 3) + (h + 1) % 3``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentOrientation, InvalidParam, NonManifold

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh.

    Parameters
    ----------
    positions : (n, 3) float array
        Vertex positions in model units.
    triangles : (m, 3) int array
        Vertex indices, counterclockwise per face.
    """

    positions: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=np.float64))
        tri = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise InvalidParam(f"positions must be (n, 3), got {pos.shape}")
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise InvalidParam(f"triangles must be (m, 3), got {tri.shape}")
        if not np.isfinite(pos).all():
            raise InvalidParam("positions contain NaN/Inf")
        if tri.size and (tri.min() < 0 or tri.max() >= len(pos)):
            raise InvalidParam("triangle index out of range")
        if tri.size:
            degenerate = (
                (tri[:, 0] == tri[:, 1]) | (tri[:, 1] == tri[:, 2]) | (tri[:, 2] == tri[:, 0])
            )
            if degenerate.any():
                raise InvalidParam(
                    f"triangle {int(np.flatnonzero(degenerate)[0])} repeats a vertex index"
                )
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "triangles", tri)

    @property
    def num_vertices(self) -> int:
        return len(self.positions)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def bbox_diagonal(self) -> float:
        """Length of the axis-aligned bounding-box diagonal of the positions."""
        if len(self.positions) == 0:
            return 0.0
        extent = self.positions.max(axis=0) - self.positions.min(axis=0)
        return float(np.linalg.norm(extent))


@dataclass(frozen=True)
class HalfEdgeMesh:
    """Triangle mesh plus half-edge connectivity.

    Attributes
    ----------
    mesh : TriangleMesh
        The underlying vertices and triangles.
    origin, target : (3m,) int arrays
        Origin/target vertex of each half-edge.
    next_halfedge : (3m,) int array
        Next half-edge counterclockwise within the same triangle.
    twin : (3m,) int array
        Opposite half-edge, or -1 on the boundary.
    vertex_outgoing : (n,) int array
        One outgoing half-edge per vertex (-1 for isolated vertices); for
        boundary vertices this is the outgoing boundary half-edge, so that a
        counterclockwise sweep covers the whole fan.
    boundary_vertex : (n,) bool array
        True where the vertex lies on a boundary loop.
    """

    mesh: TriangleMesh
    origin: np.ndarray
    target: np.ndarray
    next_halfedge: np.ndarray
    twin: np.ndarray
    vertex_outgoing: np.ndarray
    boundary_vertex: np.ndarray
    _vertex_faces: tuple = field(repr=False, default=None)

    @property
    def positions(self) -> np.ndarray:
        return self.mesh.positions

    @property
    def triangles(self) -> np.ndarray:
        return self.mesh.triangles

    @property
    def num_vertices(self) -> int:
        return self.mesh.num_vertices

    @property
    def num_halfedges(self) -> int:
        return len(self.origin)

    def face_of(self, h: int) -> int:
        return h // 3

    def is_boundary(self, h: int) -> bool:
        return self.twin[h] < 0

    def vertex_triangles(self, v: int) -> np.ndarray:
        """Indices of the triangles incident to vertex ``v``, in fan order."""
        return self._vertex_faces[0][self._vertex_faces[1][v]:self._vertex_faces[1][v + 1]]

    def vertex_neighbors(self, v: int) -> np.ndarray:
        """1-ring vertex neighbours of ``v`` (unordered, unique)."""
        tris = self.triangles[self.vertex_triangles(v)]
        ring = np.unique(tris)
        return ring[ring != v]


def build_halfedge(mesh: TriangleMesh) -> HalfEdgeMesh:
    """Build half-edge connectivity, validating manifoldness and orientation.

    Raises
    ------
    InconsistentOrientation
        If two triangles traverse a shared edge in the same direction.
    NonManifold
        If an edge has more than two incident triangles, or a vertex's
        incident triangles do not form a single fan.
    """
    tri = mesh.triangles
    n = mesh.num_vertices
    m = len(tri)
    nh = 3 * m

    origin = tri[:, [0, 1, 2]].ravel()
    target = tri[:, [1, 2, 0]].ravel()
    base = 3 * np.repeat(np.arange(m, dtype=np.int64), 3)
    next_he = base + np.tile(np.array([1, 2, 0], dtype=np.int64), m)

    # Pair opposite half-edges through a directed-edge key.  A duplicated
    # directed edge means either same-direction traversal (bad winding) or a
    # third face on the edge (non-manifold); the undirected count tells which.
    key_dir = origin * np.int64(n) + target
    order = np.argsort(key_dir, kind="stable")
    sorted_keys = key_dir[order]
    dup = np.flatnonzero(sorted_keys[1:] == sorted_keys[:-1])
    if dup.size:
        h = int(order[dup[0]])
        u, v = int(origin[h]), int(target[h])
        lo, hi = min(u, v), max(u, v)
        und = key_dir[(origin == lo) & (target == hi)].size + key_dir[
            (origin == hi) & (target == lo)
        ].size
        if und > 2:
            raise NonManifold(f"edge ({u}, {v}) has more than two incident triangles")
        raise InconsistentOrientation(f"edge ({u}, {v}) is traversed twice in the same direction")

    key_rev = target * np.int64(n) + origin
    pos = np.searchsorted(sorted_keys, key_rev)
    pos_clip = np.minimum(pos, nh - 1)
    twin = np.where(sorted_keys[pos_clip] == key_rev, order[pos_clip], -1).astype(np.int64)
    mismatch = twin[twin[twin >= 0]] != np.flatnonzero(twin >= 0)
    if mismatch.any():  # pragma: no cover - involution holds by construction
        raise NonManifold("half-edge pairing is not an involution")

    # Outgoing half-edge per vertex; boundary half-edges override so that fan
    # traversal (counterclockwise via twin(prev)) starts at the clockwise end.
    vertex_outgoing = np.full(n, -1, dtype=np.int64)
    vertex_outgoing[origin[::-1]] = np.arange(nh - 1, -1, -1, dtype=np.int64)
    boundary_he = np.flatnonzero(twin < 0)
    vertex_outgoing[origin[boundary_he]] = boundary_he

    boundary_vertex = np.zeros(n, dtype=bool)
    boundary_vertex[origin[boundary_he]] = True
    boundary_vertex[target[boundary_he]] = True

    # A second outgoing boundary half-edge at one vertex is a boundary bowtie.
    bo = origin[boundary_he]
    if bo.size != np.unique(bo).size:
        counts = np.bincount(bo, minlength=n)
        raise NonManifold(
            f"vertex {int(np.argmax(counts))} touches more than one boundary loop"
        )

    # Fan check: the counterclockwise sweep from vertex_outgoing must visit
    # every incident triangle exactly once (umbrella condition).
    face_count = np.bincount(tri.ravel(), minlength=n)
    prev_he = next_he[next_he]
    faces_flat = np.empty(3 * m, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(face_count)
    cursor = offsets[:-1].copy()
    for v in range(n):
        h = vertex_outgoing[v]
        if h < 0:
            if face_count[v] != 0:  # pragma: no cover - defensive
                raise NonManifold(f"vertex {v} has faces but no outgoing half-edge")
            continue
        visited = 0
        start = h
        while True:
            faces_flat[cursor[v]] = h // 3
            cursor[v] += 1
            visited += 1
            if visited > face_count[v]:
                raise NonManifold(f"vertex {v} fan does not close consistently")
            t = twin[prev_he[h]]
            if t < 0 or t == start:
                break
            h = t
        if visited != face_count[v]:
            raise NonManifold(
                f"vertex {v} is non-manifold: fan visits {visited} of {int(face_count[v])} faces"
            )

    hem = HalfEdgeMesh(
        mesh=mesh,
        origin=origin,
        target=target,
        next_halfedge=next_he,
        twin=twin,
        vertex_outgoing=vertex_outgoing,
        boundary_vertex=boundary_vertex,
        _vertex_faces=(faces_flat, offsets),
    )
    log.debug(
        "built half-edge mesh: %d vertices, %d triangles, %d boundary half-edges",
        n, m, len(boundary_he),
    )
    return hem


def spokes_and_rims(hem: HalfEdgeMesh, v: int) -> np.ndarray:
    """All half-edges of the triangles incident to ``v``, in fan order.

    The returned set contains ``3 * |T_v|`` half-edges: each edge touching
    ``v`` (a spoke) appears twice, once per direction, while the opposite
    (rim) edge of each incident triangle appears once.
    """
    if not 0 <= v < hem.num_vertices:
        raise IndexError(f"vertex index {v} out of range")
    faces = hem.vertex_triangles(v)
    return (3 * faces[:, None] + np.arange(3, dtype=np.int64)[None, :]).ravel()


def k_ring(hem: HalfEdgeMesh, v: int, k: int) -> np.ndarray:
    """Vertices within ``k`` edge hops of ``v`` (excluding ``v`` itself)."""
    seen = {int(v)}
    frontier = {int(v)}
    for _ in range(k):
        nxt = set()
        for u in frontier:
            nxt.update(int(w) for w in hem.vertex_neighbors(u))
        frontier = nxt - seen
        seen |= frontier
    seen.discard(int(v))
    return np.array(sorted(seen), dtype=np.int64)
