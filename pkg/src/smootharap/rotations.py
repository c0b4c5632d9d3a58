"""Per-vertex rotation fitting (the local step).

The local step fits one rotation per vertex to the map from rest edges to
deformed edges over the vertex's spokes-and-rims neighborhood — the classic
weighted Procrustes problem.  Two covariance flavors exist:

- edge-only: ``S_v = sum w_e/6 outer(e, e')`` (the production default);
- full: blends the edge covariance with the outer product of the rest and
  deformed Laplacian vectors, ``(1-lam) S_v + lam A_v outer(l_v, l'_v)``,
  which is the exact minimizer of the blended energy for fixed positions.

These per-vertex entry points are the readable reference; the batched path
the solver actually runs lives in :mod:`smootharap.engine` on top of
:mod:`smootharap._kernels` and must agree with them (see the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidParam
from .mesh import HalfEdgeMesh, spokes_and_rims
from .operators import DiscreteOperators, laplacian_vector

__all__ = [
    "RotationField",
    "procrustes_rotation",
    "fit_rotation_edge_only",
    "fit_rotation_full",
]

#: Orthonormality / determinant slack for a valid rotation field.
ROTATION_TOLERANCE = 1e-10


@dataclass(frozen=True)
class RotationField:
    """One 3x3 rotation per vertex, stored as an ``(n, 3, 3)`` array."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=np.float64)
        if m.ndim != 3 or m.shape[1:] != (3, 3):
            raise InvalidParam(f"expected (n, 3, 3) rotations, got {m.shape}")
        object.__setattr__(self, "matrices", m)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    @classmethod
    def identity(cls, n: int) -> "RotationField":
        return cls(np.broadcast_to(np.eye(3), (n, 3, 3)).copy())

    def max_orthogonality_error(self) -> float:
        """Largest deviation of any R^T R from the identity."""
        prods = np.einsum("nji,njk->nik", self.matrices, self.matrices)
        return float(np.abs(prods - np.eye(3)).max())

    def max_determinant_error(self) -> float:
        return float(np.abs(np.linalg.det(self.matrices) - 1.0).max())

    def is_valid(self, tolerance: float = ROTATION_TOLERANCE) -> bool:
        return (
            self.max_orthogonality_error() <= tolerance
            and self.max_determinant_error() <= tolerance
        )


def procrustes_rotation(S: np.ndarray) -> np.ndarray:
    """Proper rotation maximizing ``tr(R S)`` for a single 3x3 covariance.

    Uses the SVD ``S = U diag(s) W^T`` and flips the sign of the smallest
    singular direction when ``W U^T`` is a reflection; an all-zero covariance
    yields the identity.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (3, 3):
        raise InvalidParam(f"expected a 3x3 covariance, got {S.shape}")
    return _kernels.fit_rotations_numpy(S[None])[0]


def _edge_covariance(hem: HalfEdgeMesh, ops: DiscreteOperators, deformed, v: int):
    halfedges = spokes_and_rims(hem, v)
    rest = hem.mesh.positions
    tails = hem.origin[halfedges]
    heads = hem.target[halfedges]
    w6 = ops.weights[halfedges] / 6.0
    e_rest = rest[heads] - rest[tails]
    e_cur = deformed[heads] - deformed[tails]
    return np.einsum("h,hi,hj->ij", w6, e_rest, e_cur)


def fit_rotation_edge_only(
    hem: HalfEdgeMesh, ops: DiscreteOperators, deformed: np.ndarray, v: int
) -> np.ndarray:
    """Best rotation for vertex ``v`` from edge correspondences alone."""
    deformed = np.asarray(deformed, dtype=np.float64)
    return procrustes_rotation(_edge_covariance(hem, ops, deformed, v))


def fit_rotation_full(
    hem: HalfEdgeMesh,
    ops: DiscreteOperators,
    deformed: np.ndarray,
    v: int,
    lam: float,
) -> np.ndarray:
    """Best rotation for vertex ``v`` under the blended covariance.

    At ``lam = 0`` this reduces to edge-only fitting up to a uniform positive
    scale of the covariance, which leaves the maximizer unchanged.
    """
    if not 0.0 <= lam < 1.0:
        raise InvalidParam(f"lambda must be in [0, 1), got {lam}")
    deformed = np.asarray(deformed, dtype=np.float64)
    S = (1.0 - lam) * _edge_covariance(hem, ops, deformed, v)
    ell_rest = laplacian_vector(hem, hem.mesh.positions, v)
    ell_cur = laplacian_vector(hem, deformed, v)
    S += lam * ops.areas[v] * np.outer(ell_rest, ell_cur)
    return procrustes_rotation(S)
