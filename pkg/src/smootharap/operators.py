"""Discrete differential operators on half-edge meshes.

Assembles per-half-edge cotangent weights, barycentric lumped vertex areas,
and the sparse cotangent Laplacian ``L`` (positive diagonal, symmetric, zero
row sums).  The sign convention is chosen so that row ``v`` of ``M^-1 L X``
equals the area-corrected Laplacian vector

    l_v = sum_{e : v in e} (w_e / 2 A_v) d_e^v e,

where ``e`` runs over all half-edges touching ``v``, ``e`` also denotes the
edge vector (target minus origin), and ``d_e^v`` is +1 when ``v`` is the
half-edge's target and -1 when it is its origin.  For smooth surfaces this
row approximates the mean-curvature normal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangle
from .mesh import HalfEdgeMesh

log = logging.getLogger(__name__)

#: Triangles with area below this fraction of (bbox diagonal)^2 are rejected.
DEGENERACY_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DiscreteOperators:
    """Cotan weights, lumped areas, and the assembled Laplacian.

    Attributes
    ----------
    weights : (3m,) float array
        Cotangent weight per half-edge (raw cotangents, not clamped; may be
        negative on obtuse triangles).
    areas : (n,) float array
        Barycentric lumped vertex areas — the diagonal of the mass matrix M.
    laplacian : sparse (n, n) matrix
        Symmetric cotan Laplacian with positive diagonal and zero row sums.
    negative_weight_count : int
        Diagnostic: number of half-edges with negative cotan weight.
    """

    weights: np.ndarray
    areas: np.ndarray
    laplacian: sp.csr_matrix
    negative_weight_count: int

    @property
    def num_vertices(self) -> int:
        return len(self.areas)

    @property
    def mass(self) -> sp.dia_matrix:
        """Diagonal lumped mass matrix M."""
        return sp.diags(self.areas)

    @property
    def inverse_mass(self) -> sp.dia_matrix:
        return sp.diags(1.0 / self.areas)


def triangle_areas(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Areas of all triangles."""
    p0 = positions[triangles[:, 0]]
    p1 = positions[triangles[:, 1]]
    p2 = positions[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)


def _check_degenerate(mesh, areas: np.ndarray) -> None:
    threshold = DEGENERACY_THRESHOLD * mesh.bbox_diagonal ** 2
    bad = np.flatnonzero(areas <= threshold)
    if bad.size:
        raise DegenerateTriangle(
            f"triangle {int(bad[0])} has area {areas[bad[0]]:.3e} "
            f"below the degeneracy threshold {threshold:.3e}"
        )


def halfedge_cotans(hem: HalfEdgeMesh) -> np.ndarray:
    """Cotan weight for every half-edge, indexed like the half-edges.

    The weight of half-edge ``h`` is the cotangent of the angle at the
    triangle corner opposite ``h``.
    """
    mesh = hem.mesh
    pos = mesh.positions
    tri = mesh.triangles
    _check_degenerate(mesh, triangle_areas(pos, tri))
    corners = pos[tri]  # (m, 3, 3)
    cots = np.empty((len(tri), 3))
    for k in range(3):
        # half-edge k runs corner k -> k+1; the opposite corner is k+2
        u = corners[:, k, :] - corners[:, (k + 2) % 3, :]
        v = corners[:, (k + 1) % 3, :] - corners[:, (k + 2) % 3, :]
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cots[:, k] = (u * v).sum(axis=1) / cross
    return cots.ravel()


def cotan_weight(hem: HalfEdgeMesh, h: int) -> float:
    """Cotangent weight of a single half-edge (see :func:`halfedge_cotans`)."""
    f, k = divmod(int(h), 3)
    tri = hem.mesh.triangles[f]
    pos = hem.mesh.positions
    _check_degenerate(hem.mesh, triangle_areas(pos, tri[None, :]))
    u = pos[tri[k]] - pos[tri[(k + 2) % 3]]
    v = pos[tri[(k + 1) % 3]] - pos[tri[(k + 2) % 3]]
    return float(np.dot(u, v) / np.linalg.norm(np.cross(u, v)))


def vertex_areas(hem: HalfEdgeMesh) -> np.ndarray:
    """Barycentric lumped vertex areas: one third of each incident triangle."""
    mesh = hem.mesh
    areas = triangle_areas(mesh.positions, mesh.triangles)
    _check_degenerate(mesh, areas)
    out = np.zeros(mesh.num_vertices)
    np.add.at(out, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    return out


def assemble_laplacian(hem: HalfEdgeMesh) -> DiscreteOperators:
    """Assemble cotan weights, vertex areas, and the sparse Laplacian.

    Each half-edge ``(u, v)`` with weight ``w`` contributes the symmetric
    stamp ``+w/2`` to the diagonal entries ``(u, u)``, ``(v, v)`` and
    ``-w/2`` to ``(u, v)``, ``(v, u)``; an interior edge therefore ends up
    with the classic ``-(cot a + cot b) / 2`` off-diagonal.
    """
    weights = halfedge_cotans(hem)
    areas = vertex_areas(hem)
    u = hem.origin
    v = hem.target
    half = 0.5 * weights
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([u, v, v, u])
    vals = np.concatenate([half, half, -half, -half])
    n = hem.num_vertices
    laplacian = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    laplacian.sum_duplicates()
    negative = int(np.count_nonzero(weights < 0.0))
    if negative:
        log.debug("%d of %d half-edges have negative cotan weight", negative, len(weights))
    return DiscreteOperators(
        weights=weights,
        areas=areas,
        laplacian=laplacian,
        negative_weight_count=negative,
    )


def laplacian_vector(hem: HalfEdgeMesh, positions: np.ndarray, v: int) -> np.ndarray:
    """Laplacian vector ``l_v`` by direct summation over half-edges at ``v``.

    Weights and the vertex area come from the rest mesh; only the edge
    vectors are taken from ``positions``, so for any position matrix ``X``
    this equals row ``v`` of ``M^-1 L X``.  Everything is recomputed on the
    fly, independently of :func:`assemble_laplacian`, so this serves as its
    reference implementation.
    """
    total = np.zeros(3)
    area = 0.0
    tri = hem.mesh.triangles
    rest = hem.mesh.positions
    for f in hem.vertex_triangles(v):
        corners = tri[f]
        pts = rest[corners]
        area += 0.5 * np.linalg.norm(np.cross(pts[1] - pts[0], pts[2] - pts[0])) / 3.0
        for k in range(3):
            a, b = corners[k], corners[(k + 1) % 3]
            if v != a and v != b:
                continue
            h = 3 * f + k
            w = cotan_weight(hem, h)
            edge = positions[b] - positions[a]
            sign = 1.0 if v == b else -1.0
            total += (w * sign) * edge
    return total / (2.0 * area)


def laplacian_vectors(operators: DiscreteOperators, positions: np.ndarray) -> np.ndarray:
    """All Laplacian vectors at once: ``M^-1 L X`` (one row per vertex)."""
    return (operators.laplacian @ positions) / operators.areas[:, None]


def mean_curvature_magnitudes(operators: DiscreteOperators, positions: np.ndarray) -> np.ndarray:
    """Per-vertex discrete mean-curvature magnitude ``|l_v|``."""
    return np.linalg.norm(laplacian_vectors(operators, positions), axis=1)
