"""The blended-rigidity deformation engine.

The energy being minimized is a convex combination of the classic per-vertex
rigidity energy over spokes-and-rims neighborhoods and an area-weighted
Laplacian-vector rigidity term:

    E = (1 - lam) * E_arap + lam * E_smooth,    lam in [0, 1).

Optimization alternates a local step (per-vertex rotation fitting, see
:mod:`smootharap.rotations`) with a global step (one sparse constrained
solve).  For fixed rotations the energy is quadratic with Hessian
``2 A = 2 (lam L M^-1 L + (1 - lam) L)`` and gradient ``2 (A V' - rhs)``,
so the global step solves ``A V' = rhs`` under the handle constraints.
A tiny proximal shift ``eps (V' - V'_prev)`` keeps the system positive
definite without moving its fixed points.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import InvalidParam, NonFinite
from .linear import (
    DEFAULT_EPSILON,
    ConstraintSet,
    UpdatingSolver,
    factorize,
    regularize,
    substitution_solve,
)
from .mesh import HalfEdgeMesh, TriangleMesh, build_halfedge
from .operators import DiscreteOperators, assemble_laplacian, laplacian_vectors
from .rotations import RotationField

log = logging.getLogger(__name__)

__all__ = [
    "RotationFit",
    "ConstraintMode",
    "InitMode",
    "DeformParams",
    "DeformContext",
    "DeformState",
    "DeformResult",
    "build_context",
    "assemble_system_matrix",
    "assemble_rhs",
    "local_step",
    "global_step",
    "initialize",
    "deform",
]


class RotationFit(str, Enum):
    EDGE_ONLY = "EdgeOnly"
    FULL = "Full"


class ConstraintMode(str, Enum):
    SUBSTITUTION = "Substitution"
    KKT_UPDATING = "KktUpdating"


class InitMode(str, Enum):
    ORIGINAL_MESH = "OriginalMesh"
    POISSON = "Poisson"
    BI_LAPLACIAN = "BiLaplacian"
    PREVIOUS = "Previous"


@dataclass(frozen=True)
class DeformParams:
    """Solver settings; ``validate()`` raises on out-of-range values."""

    lam: float = 0.95
    epsilon: float = DEFAULT_EPSILON
    max_iterations: int = 2000
    tolerance: float = 1e-4
    rotation_fit: RotationFit = RotationFit.EDGE_ONLY
    constraint_mode: ConstraintMode = ConstraintMode.SUBSTITUTION
    init: InitMode = InitMode.ORIGINAL_MESH

    def validate(self) -> "DeformParams":
        if not 0.0 <= self.lam < 1.0:
            raise InvalidParam(f"lambda must be in [0, 1), got {self.lam}")
        if not self.epsilon > 0.0:
            raise InvalidParam(f"epsilon must be positive, got {self.epsilon}")
        if not self.tolerance > 0.0:
            raise InvalidParam(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise InvalidParam(f"max_iterations must be >= 1, got {self.max_iterations}")
        # coerce plain strings (e.g. straight from JSON configs)
        return replace(
            self,
            rotation_fit=RotationFit(self.rotation_fit),
            constraint_mode=ConstraintMode(self.constraint_mode),
            init=InitMode(self.init),
        )


@dataclass(frozen=True)
class DeformContext:
    """Everything precomputable for a fixed mesh and lambda."""

    hem: HalfEdgeMesh
    ops: DiscreteOperators
    lam: float
    epsilon: float
    tri: np.ndarray          # (m, 3) int64
    rest_edges: np.ndarray   # (m, 3, 3): slot k runs corner k -> k+1
    w6: np.ndarray           # (m, 3) cotan weights / 6
    ell_rest: np.ndarray     # (n, 3) rest Laplacian vectors
    system: sp.csc_matrix    # lam L M^-1 L + (1 - lam) L
    system_reg: sp.csc_matrix
    const_arap: float        # rotation-independent part of E_arap
    const_smooth: float
    bbox: float

    @property
    def num_vertices(self) -> int:
        return self.hem.num_vertices


@dataclass
class DeformState:
    """Mutable carrier of one optimization run (or interactive session)."""

    ctx: DeformContext
    params: DeformParams
    positions: np.ndarray
    previous: np.ndarray
    rotations: RotationField | None = None
    trace: list = field(default_factory=list)
    solver: UpdatingSolver | None = None


@dataclass(frozen=True)
class DeformResult:
    positions: np.ndarray
    iterations: int
    converged: bool
    trace: np.ndarray  # (iterations, 3) columns: E, E_arap, E_smooth
    rotations: RotationField


def assemble_system_matrix(ops: DiscreteOperators, lam: float) -> sp.csc_matrix:
    """Global-step matrix ``lam L M^-1 L + (1 - lam) L`` (symmetric PSD,
    constants in the nullspace)."""
    if not 0.0 <= lam < 1.0:
        raise InvalidParam(f"lambda must be in [0, 1), got {lam}")
    L = ops.laplacian
    bilap = (L @ sp.diags(1.0 / ops.areas) @ L).tocsc()
    return (lam * bilap + (1.0 - lam) * L).tocsc()


def _rhs_from_parts(L, lam, rotated_ell, b_arap):
    return lam * (L @ rotated_ell) + (1.0 - lam) * b_arap


def assemble_rhs(hem: HalfEdgeMesh, ops: DiscreteOperators, rotations, lam: float):
    """Right-hand side ``lam L^T Rhat + (1 - lam) b`` for given rotations.

    ``Rhat`` stacks the rotated rest Laplacian vectors ``(R_v l_v)^T``; ``b``
    scatters rotated rest edges with the head/tail sign convention.  With
    identity rotations this equals ``system_matrix @ rest positions``: the
    rest pose is a stationary point of the unconstrained energy.
    """
    R = rotations.matrices if isinstance(rotations, RotationField) else np.asarray(rotations)
    tri = hem.triangles.astype(np.int64)
    rest = hem.positions
    rest_edges = np.ascontiguousarray(rest[tri[:, [1, 2, 0]]] - rest[tri])
    w6 = np.ascontiguousarray(ops.weights.reshape(-1, 3) / 6.0)
    ell = laplacian_vectors(ops, rest)
    rotated_ell = np.einsum("nij,nj->ni", R, ell)
    b_arap = _kernels.rotation_rhs(tri, rest_edges, w6, np.ascontiguousarray(R))
    return _rhs_from_parts(ops.laplacian, lam, rotated_ell, b_arap)


def build_context(
    hem: HalfEdgeMesh,
    ops: DiscreteOperators | None = None,
    lam: float = 0.95,
    epsilon: float = DEFAULT_EPSILON,
) -> DeformContext:
    if ops is None:
        ops = assemble_laplacian(hem)
    if not 0.0 <= lam < 1.0:
        raise InvalidParam(f"lambda must be in [0, 1), got {lam}")
    if not epsilon > 0.0:
        raise InvalidParam(f"epsilon must be positive, got {epsilon}")
    tri = np.ascontiguousarray(hem.triangles, dtype=np.int64)
    rest = hem.positions
    rest_edges = np.ascontiguousarray(rest[tri[:, [1, 2, 0]]] - rest[tri])
    w6 = np.ascontiguousarray(ops.weights.reshape(-1, 3) / 6.0)
    ell_rest = laplacian_vectors(ops, rest)
    system = assemble_system_matrix(ops, lam)
    system_reg = regularize(system, epsilon)
    const_arap = 3.0 * float(np.einsum("fk,fki,fki->", w6, rest_edges, rest_edges))
    const_smooth = float(np.einsum("n,ni,ni->", ops.areas, ell_rest, ell_rest))
    return DeformContext(
        hem=hem,
        ops=ops,
        lam=lam,
        epsilon=epsilon,
        tri=tri,
        rest_edges=rest_edges,
        w6=w6,
        ell_rest=ell_rest,
        system=system,
        system_reg=system_reg,
        const_arap=const_arap,
        const_smooth=const_smooth,
        bbox=hem.mesh.bbox_diagonal,
    )


def _fit_field(ctx: DeformContext, positions: np.ndarray, fit: RotationFit) -> RotationField:
    S = _kernels.edge_covariances(ctx.tri, ctx.rest_edges, ctx.w6, positions)
    if fit == RotationFit.FULL:
        ell_cur = laplacian_vectors(ctx.ops, positions)
        S *= 1.0 - ctx.lam
        S += ctx.lam * np.einsum("n,ni,nj->nij", ctx.ops.areas, ctx.ell_rest, ell_cur)
    return RotationField(_kernels.fit_rotations(np.ascontiguousarray(S)))


def local_step(state: DeformState) -> RotationField:
    """Fit all per-vertex rotations to the current positions (pure)."""
    return _fit_field(state.ctx, state.positions, RotationFit(state.params.rotation_fit))


def _rhs_and_parts(ctx: DeformContext, R: RotationField):
    Rm = np.ascontiguousarray(R.matrices)
    rotated_ell = np.einsum("nij,nj->ni", Rm, ctx.ell_rest)
    b_arap = _kernels.rotation_rhs(ctx.tri, ctx.rest_edges, ctx.w6, Rm)
    rhs = _rhs_from_parts(ctx.ops.laplacian, ctx.lam, rotated_ell, b_arap)
    return rhs, b_arap, rotated_ell


def _energies(ctx: DeformContext, positions, b_arap, rotated_ell):
    """(E, E_arap, E_smooth) at ``positions`` for the rotations that produced
    ``b_arap``/``rotated_ell`` — an exact expansion of the definitional sums
    as quadratic forms, costing one extra sparse matvec."""
    LV = ctx.ops.laplacian @ positions
    quad_arap = float(np.einsum("ni,ni->", positions, LV))
    cross_arap = float(np.einsum("ni,ni->", positions, b_arap))
    e_arap = quad_arap + ctx.const_arap - 2.0 * cross_arap
    quad_smooth = float(np.einsum("ni,ni,n->", LV, LV, 1.0 / ctx.ops.areas))
    cross_smooth = float(np.einsum("ni,ni->", LV, rotated_ell))
    e_smooth = quad_smooth + ctx.const_smooth - 2.0 * cross_smooth
    e_total = (1.0 - ctx.lam) * e_arap + ctx.lam * e_smooth
    return e_total, e_arap, e_smooth


def global_step(state: DeformState, params: DeformParams, constraints: ConstraintSet):
    """One constrained solve for new positions at the current rotations.

    Substitution mode eliminates the constrained rows (fresh factorization
    each call); updating mode keeps the session factorization and goes
    through the saddle-point path.  Both include the proximal shift, so a
    feasible previous iterate can only decrease the energy.
    """
    if state.rotations is None:
        raise InvalidParam("global_step requires fitted rotations on the state")
    ctx = state.ctx
    rhs, b_arap, rotated_ell = _rhs_and_parts(ctx, state.rotations)
    r_prox = rhs + ctx.epsilon * state.positions
    mode = ConstraintMode(params.constraint_mode)
    if mode == ConstraintMode.SUBSTITUTION:
        new_positions = substitution_solve(ctx.system_reg, r_prox, constraints)
    else:
        if state.solver is None:
            f = factorize(ctx.system_reg, ctx.epsilon)
            state.solver = UpdatingSolver(f, constraints)
        else:
            for v, t in zip(constraints.indices, constraints.targets):
                state.solver.set_target(int(v), t)
        # kkt_solve applies the proximal shift itself
        new_positions = state.solver.kkt_solve(rhs, state.positions)
    state.trace.append(_energies(ctx, new_positions, b_arap, rotated_ell))
    return new_positions


def initialize(
    hem: HalfEdgeMesh,
    ops: DiscreteOperators,
    constraints: ConstraintSet,
    mode: InitMode,
    previous: np.ndarray | None = None,
) -> np.ndarray:
    """Starting positions for the solve.

    ``OriginalMesh`` copies the rest pose with handle rows snapped to their
    targets; ``Poisson`` solves ``L V' = L V`` under the constraints;
    ``BiLaplacian`` does the same with ``L M^-1 L``; ``Previous`` resumes
    from caller-provided positions (interactive use).
    """
    mode = InitMode(mode)
    V = hem.positions
    if mode == InitMode.PREVIOUS:
        if previous is None:
            raise InvalidParam("Previous init requires explicit previous positions")
        previous = np.asarray(previous, dtype=np.float64)
        if previous.shape != V.shape:
            raise InvalidParam(f"previous positions must be {V.shape}, got {previous.shape}")
        return previous.copy()
    if mode == InitMode.ORIGINAL_MESH:
        out = V.copy()
        out[constraints.indices] = constraints.targets
        return out
    L = ops.laplacian
    if mode == InitMode.POISSON:
        return substitution_solve(L, L @ V, constraints)
    K = (L @ sp.diags(1.0 / ops.areas) @ L).tocsc()
    return substitution_solve(K, K @ V, constraints)


def deform(
    mesh: TriangleMesh | HalfEdgeMesh,
    constraints: ConstraintSet,
    params: DeformParams,
    initial_positions: np.ndarray | None = None,
) -> DeformResult:
    """Run the local-global loop to convergence or the iteration cap.

    Convergence: largest per-vertex displacement between consecutive
    iterates, relative to the rest bounding-box diagonal, drops below
    ``params.tolerance``.  The energy trace has one row per iteration,
    evaluated at the iteration's new positions with its rotations.
    """
    params = params.validate()
    hem = mesh if isinstance(mesh, HalfEdgeMesh) else build_halfedge(mesh)
    if len(constraints) == 0:
        raise InvalidParam("deform requires at least one constrained vertex")
    if constraints.indices.max() >= hem.num_vertices:
        raise InvalidParam("constraint index out of range")
    ops = assemble_laplacian(hem)
    ctx = build_context(hem, ops, params.lam, params.epsilon)
    if initial_positions is not None:
        start = np.asarray(initial_positions, dtype=np.float64).copy()
        if start.shape != hem.positions.shape:
            raise InvalidParam("initial_positions shape mismatch")
    else:
        start = initialize(hem, ops, constraints, params.init)
    if not np.isfinite(start).all():
        raise NonFinite("non-finite initial positions")
    state = DeformState(ctx=ctx, params=params, positions=start, previous=start.copy())
    t0 = time.perf_counter()
    iterations = 0
    converged = False
    for iterations in range(1, params.max_iterations + 1):
        state.rotations = local_step(state)
        new_positions = global_step(state, params, constraints)
        energy = state.trace[-1][0]
        if not (np.isfinite(energy) and np.isfinite(new_positions).all()):
            raise NonFinite(
                f"non-finite state at iteration {iterations} (E={energy!r})"
            )
        step = np.sqrt(((new_positions - state.positions) ** 2).sum(axis=1).max())
        state.previous = state.positions
        state.positions = new_positions
        if step / ctx.bbox < params.tolerance:
            converged = True
            break
    log.debug(
        "deform: %d iterations, converged=%s, %.1f ms",
        iterations,
        converged,
        1e3 * (time.perf_counter() - t0),
    )
    return DeformResult(
        positions=state.positions,
        iterations=iterations,
        converged=converged,
        trace=np.array(state.trace, dtype=np.float64).reshape(-1, 3),
        rotations=state.rotations,
    )
