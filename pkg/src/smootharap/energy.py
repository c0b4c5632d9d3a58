"""Deformation energies, evaluated from their definitions.

``energy_arap`` sums rigidity residuals over every (vertex, half-edge) pair
of the spokes-and-rims neighborhoods; ``energy_smooth`` sums area-weighted
residuals of the rotated Laplacian vectors.  Both are direct, vectorized
transcriptions of the sums — the solver's fast per-iteration trace uses an
algebraically equivalent quadratic form and is tested against these.

All sums use the w/6 half-edge convention: a half-edge belongs to the
neighborhoods of exactly the three corners of its triangle, and the
energy Hessian must match the cotan Laplacian (whose stamps are w/2),
so each appearance carries one sixth of the cotan weight.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParam
from .mesh import HalfEdgeMesh
from .operators import DiscreteOperators, laplacian_vectors
from .rotations import RotationField

__all__ = ["energy_arap", "energy_smooth", "energy_total"]


def _as_rotation_array(rotations, n: int) -> np.ndarray:
    R = rotations.matrices if isinstance(rotations, RotationField) else np.asarray(rotations)
    if R.shape != (n, 3, 3):
        raise InvalidParam(f"expected ({n}, 3, 3) rotations, got {R.shape}")
    return R


def energy_arap(
    hem: HalfEdgeMesh,
    ops: DiscreteOperators,
    deformed: np.ndarray,
    rotations,
) -> float:
    """Rigidity energy: sum of ``w/6 |e' - R_v e|^2`` over all pairs of a
    vertex and a half-edge of its spokes-and-rims neighborhood."""
    deformed = np.asarray(deformed, dtype=np.float64)
    tri = hem.triangles
    R = _as_rotation_array(rotations, hem.num_vertices)
    heads = tri[:, [1, 2, 0]]
    rest = hem.positions
    e_rest = rest[heads] - rest[tri]
    e_cur = deformed[heads] - deformed[tri]
    w6 = ops.weights.reshape(-1, 3) / 6.0
    total = 0.0
    for c in range(3):
        rotated = np.einsum("fij,fkj->fki", R[tri[:, c]], e_rest)
        diff = e_cur - rotated
        total += float(np.einsum("fk,fki,fki->", w6, diff, diff))
    return total


def energy_smooth(
    hem: HalfEdgeMesh,
    ops: DiscreteOperators,
    deformed: np.ndarray,
    rotations,
) -> float:
    """Laplacian-vector rigidity: ``sum_v A_v |l'_v - R_v l_v|^2``."""
    deformed = np.asarray(deformed, dtype=np.float64)
    R = _as_rotation_array(rotations, hem.num_vertices)
    ell_rest = laplacian_vectors(ops, hem.positions)
    ell_cur = laplacian_vectors(ops, deformed)
    diff = ell_cur - np.einsum("nij,nj->ni", R, ell_rest)
    return float(np.einsum("n,ni,ni->", ops.areas, diff, diff))


def energy_total(lam: float, e_arap: float, e_smooth: float) -> float:
    """Blend ``(1 - lam) * E_arap + lam * E_smooth``."""
    if not 0.0 <= lam < 1.0:
        raise InvalidParam(f"lambda must be in [0, 1), got {lam}")
    return (1.0 - lam) * e_arap + lam * e_smooth
