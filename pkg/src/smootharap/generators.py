"""Deterministic synthetic test meshes.

Five families are provided: a flat grid, a plane with smooth random bumps, a
cylinder with radial bumps, a long square-profile bar, and a plane with
orthogonal single-vertex spikes.  All generators are deterministic for fixed
parameters; randomized placement is driven by a seeded generator.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParam
from .mesh import TriangleMesh

KINDS = ("grid_plane", "bumpy_plane", "bumpy_cylinder", "bar", "spiky_plane")


def make_test_mesh(kind: str, resolution: int, params: dict | None = None) -> TriangleMesh:
    """Build one of the named test meshes.

    Parameters
    ----------
    kind
        One of ``grid_plane``, ``bumpy_plane``, ``bumpy_cylinder``, ``bar``,
        ``spiky_plane``.
    resolution
        Vertices per side (planes), per circumference ring (cylinder), or per
        cross-section side (bar).  Must be >= 2.
    params
        Optional kind-specific keyword overrides; unknown keys raise
        :class:`InvalidParam`.
    """
    if kind not in KINDS:
        raise InvalidParam(f"unknown test-mesh kind {kind!r}; expected one of {KINDS}")
    if not isinstance(resolution, (int, np.integer)) or resolution < 2:
        raise InvalidParam(f"resolution must be an integer >= 2, got {resolution!r}")
    fn = globals()[f"_make_{kind}"]
    params = dict(params or {})
    try:
        return fn(int(resolution), **params)
    except TypeError as exc:
        raise InvalidParam(f"bad parameters for {kind}: {exc}") from None


def _grid(res: int, size: float):
    """Vertices and triangles of a res*res grid on [0, size]^2, z = 0."""
    xs = np.linspace(0.0, size, res)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    positions = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(res * res)])
    idx = np.arange(res * res, dtype=np.int64).reshape(res, res)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    # split each cell along the (a, c) diagonal; counterclockwise seen from +z
    triangles = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return positions, triangles


def _make_grid_plane(res: int, size: float = 1.0) -> TriangleMesh:
    if size <= 0:
        raise InvalidParam("size must be positive")
    positions, triangles = _grid(res, size)
    return TriangleMesh(positions=positions, triangles=triangles)


def _make_bumpy_plane(
    res: int,
    size: float = 1.0,
    num_bumps: int = 12,
    bump_height: float = 0.08,
    bump_radius: float = 0.1,
    seed: int = 0,
) -> TriangleMesh:
    if size <= 0 or bump_radius <= 0:
        raise InvalidParam("size and bump_radius must be positive")
    positions, triangles = _grid(res, size)
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.15 * size, 0.85 * size, size=(num_bumps, 2))
    heights = bump_height * size * rng.uniform(0.5, 1.0, size=num_bumps)
    xy = positions[:, :2]
    z = positions[:, 2]
    for c, h in zip(centers, heights):
        d2 = ((xy - c) ** 2).sum(axis=1)
        z += h * np.exp(-d2 / (2.0 * (bump_radius * size) ** 2))
    return TriangleMesh(positions=positions, triangles=triangles)


def _make_spiky_plane(
    res: int,
    size: float = 1.0,
    spike_height: float = 0.12,
    spike_spacing: int = 4,
) -> TriangleMesh:
    """Flat plane with sharp single-vertex spikes orthogonal to the surface."""
    if spike_spacing < 2:
        raise InvalidParam("spike_spacing must be >= 2")
    positions, triangles = _grid(res, size)
    idx = np.arange(res * res, dtype=np.int64).reshape(res, res)
    sub = idx[spike_spacing:-1:spike_spacing, spike_spacing:-1:spike_spacing]
    positions[sub.ravel(), 2] += spike_height * size
    return TriangleMesh(positions=positions, triangles=triangles)


def _make_bumpy_cylinder(
    res: int,
    rings: int | None = None,
    length: float = 2.0,
    radius: float = 0.4,
    num_bumps: int = 10,
    bump_height: float = 0.08,
    bump_radius: float = 0.35,
    seed: int = 0,
) -> TriangleMesh:
    """Open tube along +z, closed around its circumference (boundary at caps).

    ``res`` vertices per circumference ring; ``rings`` rings along the axis
    (defaults to ``res`` so the quads stay near-square).
    """
    if res < 3:
        raise InvalidParam("cylinder resolution must be >= 3")
    if length <= 0 or radius <= 0 or bump_radius <= 0:
        raise InvalidParam("length, radius and bump_radius must be positive")
    rings = res if rings is None else int(rings)
    if rings < 2:
        raise InvalidParam("rings must be >= 2")
    theta = np.linspace(0.0, 2.0 * np.pi, res, endpoint=False)
    zs = np.linspace(0.0, length, rings)
    tt, zz = np.meshgrid(theta, zs, indexing="ij")  # index (j around, i along)
    normal = np.stack([np.cos(tt), np.sin(tt)], axis=-1)

    r = np.full(tt.shape, radius)
    rng = np.random.default_rng(seed)
    centers_t = rng.uniform(0.0, 2.0 * np.pi, size=num_bumps)
    centers_z = rng.uniform(0.15 * length, 0.85 * length, size=num_bumps)
    heights = bump_height * radius * rng.uniform(0.5, 1.0, size=num_bumps) * rng.choice(
        [-1.0, 1.0], size=num_bumps
    )
    for ct, cz, h in zip(centers_t, centers_z, heights):
        dt = np.angle(np.exp(1j * (tt - ct)))  # wrapped angular distance
        d2 = (dt * radius) ** 2 + (zz - cz) ** 2
        r += h * np.exp(-d2 / (2.0 * (bump_radius * radius) ** 2))

    positions = np.empty((res * rings, 3))
    positions[:, 0] = (r * normal[..., 0]).ravel()
    positions[:, 1] = (r * normal[..., 1]).ravel()
    positions[:, 2] = zz.ravel()

    idx = np.arange(res * rings, dtype=np.int64).reshape(res, rings)
    jn = np.roll(np.arange(res, dtype=np.int64), -1)  # next ring position (wraps)
    a = idx[:, :-1].ravel()
    b = idx[jn, :-1].ravel()
    c = idx[jn, 1:].ravel()
    d = idx[:, 1:].ravel()
    # outward-facing counterclockwise winding
    triangles = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriangleMesh(positions=positions, triangles=triangles)


def _make_bar(
    res: int,
    segments: int | None = None,
    length: float = 3.0,
    width: float = 0.5,
) -> TriangleMesh:
    """Long square-profile tube along +z with open ends.

    ``res`` vertices per cross-section side (4 * (res - 1) around the
    perimeter); ``segments`` rings along the axis (defaults so quads are
    near-square).
    """
    if length <= 0 or width <= 0:
        raise InvalidParam("length and width must be positive")
    side = np.linspace(-0.5 * width, 0.5 * width, res)
    w = 0.5 * width
    # perimeter of the square cross-section, counterclockwise in the xy plane
    ring = np.concatenate(
        [
            np.column_stack([side[:-1], np.full(res - 1, -w)]),
            np.column_stack([np.full(res - 1, w), side[:-1]]),
            np.column_stack([side[::-1][:-1], np.full(res - 1, w)]),
            np.column_stack([np.full(res - 1, -w), side[::-1][:-1]]),
        ]
    )
    m = len(ring)  # 4 * (res - 1)
    per = width / (res - 1)  # perimeter step
    segments = max(2, int(round(length / per)) + 1) if segments is None else int(segments)
    if segments < 2:
        raise InvalidParam("segments must be >= 2")
    zs = np.linspace(0.0, length, segments)
    positions = np.empty((m * segments, 3))
    positions[:, 0] = np.repeat(ring[:, 0], segments)
    positions[:, 1] = np.repeat(ring[:, 1], segments)
    positions[:, 2] = np.tile(zs, m)

    idx = np.arange(m * segments, dtype=np.int64).reshape(m, segments)
    jn = np.roll(np.arange(m, dtype=np.int64), -1)
    a = idx[:, :-1].ravel()
    b = idx[jn, :-1].ravel()
    c = idx[jn, 1:].ravel()
    d = idx[:, 1:].ravel()
    triangles = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriangleMesh(positions=positions, triangles=triangles)
