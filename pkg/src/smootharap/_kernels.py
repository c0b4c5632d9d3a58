"""Hot-path kernels for the local-global loop.

Three operations dominate a solver iteration besides the sparse solve:

- scattering per-half-edge covariance contributions into per-vertex 3x3
  matrices (local step input),
- extracting the closest rotation from each covariance (local step),
- scattering rotated rest edges into the right-hand side (global step input).

Each has a compiled implementation (numba, if importable) and a pure-numpy
fallback with identical semantics.  The dispatch happens once at import; set
``SMOOTHARAP_NO_NUMBA=1`` to force the fallbacks (used by the test suite to
cross-check the two paths).

Conventions: triangles are ``(m, 3)`` int64; slot ``k`` of a triangle is the
half-edge from corner ``k`` to corner ``(k+1) % 3``; ``rest_edges[f, k]`` is
that edge vector on the rest mesh and ``w6[f, k]`` its cotan weight divided
by six (each half-edge appears in the neighborhoods of exactly the three
corners of its triangle, which is where the six comes from: three corners
times the half of the cotan stamp).  Covariances map rest to deformed:
``S_v = sum w6 * outer(e_rest, e_cur)`` plus, in full fitting, the
area-weighted outer product of the rest and deformed Laplacian vectors.
"""

from __future__ import annotations

import logging
import os

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "HAVE_NUMBA",
    "edge_covariances",
    "fit_rotations",
    "rotation_rhs",
    "edge_covariances_numpy",
    "fit_rotations_numpy",
    "rotation_rhs_numpy",
]

_FORCE_FALLBACK = os.environ.get("SMOOTHARAP_NO_NUMBA", "") not in ("", "0")

try:  # pragma: no cover - exercised implicitly by the dispatch tests
    if _FORCE_FALLBACK:
        raise ImportError("numba disabled via SMOOTHARAP_NO_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------


def edge_covariances_numpy(tri, rest_edges, w6, positions):
    """Per-vertex covariance ``S_v = sum_{e in N(v)} w6_e outer(e, e')``.

    The neighborhood of a vertex is spokes-and-rims: every half-edge of every
    incident triangle, so each triangle contributes its full 3-edge sum to
    each of its three corners.
    """
    heads = tri[:, [1, 2, 0]]
    cur = positions[heads] - positions[tri]
    per_tri = np.einsum("fk,fki,fkj->fij", w6, rest_edges, cur)
    S = np.zeros((positions.shape[0], 3, 3))
    for c in range(3):
        np.add.at(S, tri[:, c], per_tri)
    return S


def fit_rotations_numpy(S):
    """Closest rotations ``R_v = argmax tr(R S_v)`` via batched SVD.

    With ``S = U diag(s) W^T`` the maximizer over proper rotations is
    ``W diag(1, 1, det(W U^T)) U^T`` (sign flip on the smallest singular
    value).  All-zero covariances map to the identity.
    """
    S = np.ascontiguousarray(S, dtype=np.float64)
    U, _, Vt = np.linalg.svd(S)
    W = np.swapaxes(Vt, 1, 2)
    d = np.where(np.linalg.det(U) * np.linalg.det(W) < 0.0, -1.0, 1.0)
    signs = np.ones((S.shape[0], 3))
    signs[:, 2] = d
    R = np.einsum("nij,nj,nkj->nik", W, signs, U)
    degenerate = np.abs(S).max(axis=(1, 2)) == 0.0
    if degenerate.any():
        R[degenerate] = np.eye(3)
    return R


def rotation_rhs_numpy(tri, rest_edges, w6, R):
    """Gradient-consistent scatter ``b_p = sum w6 d_e^p R_v e`` over all
    (vertex, neighborhood-half-edge) pairs; ``d_e^p`` is +1 at the head of
    the half-edge, -1 at its tail."""
    n = R.shape[0]
    out = np.zeros((n, 3))
    heads = tri[:, [1, 2, 0]]
    for c in range(3):
        rot = np.einsum("fij,fkj->fki", R[tri[:, c]], rest_edges)
        rot *= w6[:, :, None]
        for k in range(3):
            np.add.at(out, heads[:, k], rot[:, k])
            np.subtract.at(out, tri[:, k], rot[:, k])
    return out


# ---------------------------------------------------------------------------
# compiled implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=True, inline="always")
    def _jacobi_rotate(B, Q, p, q):
        # One cyclic Jacobi rotation zeroing B[p, q], accumulated into Q.
        if B[p, q] == 0.0:
            return
        tau = (B[q, q] - B[p, p]) / (2.0 * B[p, q])
        if tau >= 0.0:
            t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
        else:
            t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        for k in range(3):
            bkp = B[k, p]
            bkq = B[k, q]
            B[k, p] = c * bkp - s * bkq
            B[k, q] = s * bkp + c * bkq
        for k in range(3):
            bpk = B[p, k]
            bqk = B[q, k]
            B[p, k] = c * bpk - s * bqk
            B[q, k] = s * bpk + c * bqk
        for k in range(3):
            qkp = Q[k, p]
            qkq = Q[k, q]
            Q[k, p] = c * qkp - s * qkq
            Q[k, q] = s * qkp + c * qkq

    @numba.njit(cache=True, fastmath=True)
    def _edge_covariances_nb(tri, rest_edges, w6, positions):
        n = positions.shape[0]
        m = tri.shape[0]
        S = np.zeros((n, 3, 3))
        C = np.empty((3, 3))
        for f in range(m):
            for i in range(3):
                for j in range(3):
                    C[i, j] = 0.0
            for k in range(3):
                a = tri[f, k]
                b = tri[f, (k + 1) % 3]
                ex = positions[b, 0] - positions[a, 0]
                ey = positions[b, 1] - positions[a, 1]
                ez = positions[b, 2] - positions[a, 2]
                w = w6[f, k]
                rx = w * rest_edges[f, k, 0]
                ry = w * rest_edges[f, k, 1]
                rz = w * rest_edges[f, k, 2]
                C[0, 0] += rx * ex
                C[0, 1] += rx * ey
                C[0, 2] += rx * ez
                C[1, 0] += ry * ex
                C[1, 1] += ry * ey
                C[1, 2] += ry * ez
                C[2, 0] += rz * ex
                C[2, 1] += rz * ey
                C[2, 2] += rz * ez
            for c in range(3):
                v = tri[f, c]
                for i in range(3):
                    for j in range(3):
                        S[v, i, j] += C[i, j]
        return S

    @numba.njit(cache=True, fastmath=True)
    def _fit_rotations_nb(S):
        n = S.shape[0]
        R = np.empty((n, 3, 3))
        B = np.empty((3, 3))
        Q = np.empty((3, 3))
        U = np.empty((3, 3))
        W = np.empty((3, 3))
        for idx in range(n):
            Si = S[idx]
            scale = 0.0
            for i in range(3):
                for j in range(3):
                    a = abs(Si[i, j])
                    if a > scale:
                        scale = a
            if scale == 0.0:
                for i in range(3):
                    for j in range(3):
                        R[idx, i, j] = 1.0 if i == j else 0.0
                continue
            # Eigen-decompose S^T S (scaled to unit magnitude) by cyclic
            # Jacobi sweeps; Q accumulates the right singular vectors.
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc += Si[k, i] * Si[k, j]
                    B[i, j] = acc / (scale * scale)
            for i in range(3):
                for j in range(3):
                    Q[i, j] = 1.0 if i == j else 0.0
            for _ in range(8):
                off = abs(B[0, 1]) + abs(B[0, 2]) + abs(B[1, 2])
                if off < 1e-15 * (abs(B[0, 0]) + abs(B[1, 1]) + abs(B[2, 2]) + 1e-300):
                    break
                _jacobi_rotate(B, Q, 0, 1)
                _jacobi_rotate(B, Q, 0, 2)
                _jacobi_rotate(B, Q, 1, 2)
            l0 = B[0, 0]
            l1 = B[1, 1]
            l2 = B[2, 2]
            i0, i1, i2 = 0, 1, 2
            if l0 < l1:
                l0, l1 = l1, l0
                i0, i1 = i1, i0
            if l1 < l2:
                l1, l2 = l2, l1
                i1, i2 = i2, i1
            if l0 < l1:
                l0, l1 = l1, l0
                i0, i1 = i1, i0
            s0 = np.sqrt(max(l0, 0.0))
            s1 = np.sqrt(max(l1, 0.0))
            s2 = np.sqrt(max(l2, 0.0))
            for k in range(3):
                W[k, 0] = Q[k, i0]
                W[k, 1] = Q[k, i1]
                W[k, 2] = Q[k, i2]
            cutoff = 1e-9
            keep1 = s1 > cutoff * s0
            keep2 = s2 > cutoff * s0
            # Left singular vectors u_j = S w_j / s_j where reliable.
            for i in range(3):
                acc = 0.0
                for k in range(3):
                    acc += Si[i, k] * W[k, 0]
                U[i, 0] = acc / (scale * s0)
            nrm = np.sqrt(U[0, 0] ** 2 + U[1, 0] ** 2 + U[2, 0] ** 2)
            for i in range(3):
                U[i, 0] /= nrm
            if keep1:
                for i in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc += Si[i, k] * W[k, 1]
                    U[i, 1] = acc / (scale * s1)
                dot = U[0, 0] * U[0, 1] + U[1, 0] * U[1, 1] + U[2, 0] * U[2, 1]
                for i in range(3):
                    U[i, 1] -= dot * U[i, 0]
                nrm = np.sqrt(U[0, 1] ** 2 + U[1, 1] ** 2 + U[2, 1] ** 2)
            else:
                nrm = 0.0
            if nrm > 1e-6:
                for i in range(3):
                    U[i, 1] /= nrm
            else:
                # rank-one covariance: complete with any unit vector
                # orthogonal to u0
                ax = abs(U[0, 0])
                ay = abs(U[1, 0])
                az = abs(U[2, 0])
                if ax <= ay and ax <= az:
                    hx, hy, hz = 1.0, 0.0, 0.0
                elif ay <= az:
                    hx, hy, hz = 0.0, 1.0, 0.0
                else:
                    hx, hy, hz = 0.0, 0.0, 1.0
                cx = hy * U[2, 0] - hz * U[1, 0]
                cy = hz * U[0, 0] - hx * U[2, 0]
                cz = hx * U[1, 0] - hy * U[0, 0]
                nrm = np.sqrt(cx * cx + cy * cy + cz * cz)
                U[0, 1] = cx / nrm
                U[1, 1] = cy / nrm
                U[2, 1] = cz / nrm
            if keep2:
                for i in range(3):
                    acc = 0.0
                    for k in range(3):
                        acc += Si[i, k] * W[k, 2]
                    U[i, 2] = acc / (scale * s2)
                d0 = U[0, 0] * U[0, 2] + U[1, 0] * U[1, 2] + U[2, 0] * U[2, 2]
                d1 = U[0, 1] * U[0, 2] + U[1, 1] * U[1, 2] + U[2, 1] * U[2, 2]
                for i in range(3):
                    U[i, 2] -= d0 * U[i, 0] + d1 * U[i, 1]
                nrm = np.sqrt(U[0, 2] ** 2 + U[1, 2] ** 2 + U[2, 2] ** 2)
            else:
                nrm = 0.0
            if nrm > 1e-6:
                for i in range(3):
                    U[i, 2] /= nrm
            else:
                U[0, 2] = U[1, 0] * U[2, 1] - U[2, 0] * U[1, 1]
                U[1, 2] = U[2, 0] * U[0, 1] - U[0, 0] * U[2, 1]
                U[2, 2] = U[0, 0] * U[1, 1] - U[1, 0] * U[0, 1]
            det_u = (
                U[0, 0] * (U[1, 1] * U[2, 2] - U[1, 2] * U[2, 1])
                - U[0, 1] * (U[1, 0] * U[2, 2] - U[1, 2] * U[2, 0])
                + U[0, 2] * (U[1, 0] * U[2, 1] - U[1, 1] * U[2, 0])
            )
            det_w = (
                W[0, 0] * (W[1, 1] * W[2, 2] - W[1, 2] * W[2, 1])
                - W[0, 1] * (W[1, 0] * W[2, 2] - W[1, 2] * W[2, 0])
                + W[0, 2] * (W[1, 0] * W[2, 1] - W[1, 1] * W[2, 0])
            )
            d = 1.0 if det_u * det_w > 0.0 else -1.0
            # R = W diag(1, 1, d) U^T: the reflection (if any) is absorbed by
            # flipping the direction of smallest stretch.
            for r in range(3):
                for c in range(3):
                    R[idx, r, c] = (
                        W[r, 0] * U[c, 0] + W[r, 1] * U[c, 1] + d * W[r, 2] * U[c, 2]
                    )
        return R

    @numba.njit(cache=True, fastmath=True)
    def _rotation_rhs_nb(tri, rest_edges, w6, R):
        n = R.shape[0]
        m = tri.shape[0]
        out = np.zeros((n, 3))
        for f in range(m):
            for c in range(3):
                v = tri[f, c]
                for k in range(3):
                    a = tri[f, k]
                    b = tri[f, (k + 1) % 3]
                    w = w6[f, k]
                    rx = rest_edges[f, k, 0]
                    ry = rest_edges[f, k, 1]
                    rz = rest_edges[f, k, 2]
                    mx = w * (R[v, 0, 0] * rx + R[v, 0, 1] * ry + R[v, 0, 2] * rz)
                    my = w * (R[v, 1, 0] * rx + R[v, 1, 1] * ry + R[v, 1, 2] * rz)
                    mz = w * (R[v, 2, 0] * rx + R[v, 2, 1] * ry + R[v, 2, 2] * rz)
                    out[b, 0] += mx
                    out[b, 1] += my
                    out[b, 2] += mz
                    out[a, 0] -= mx
                    out[a, 1] -= my
                    out[a, 2] -= mz
        return out

    edge_covariances = _edge_covariances_nb
    fit_rotations = _fit_rotations_nb
    rotation_rhs = _rotation_rhs_nb
else:  # pragma: no cover - the numba path is the default in CI
    log.info("numba unavailable or disabled; using numpy kernels")
    edge_covariances = edge_covariances_numpy
    fit_rotations = fit_rotations_numpy
    rotation_rhs = rotation_rhs_numpy
