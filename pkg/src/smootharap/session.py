"""Interactive deformation sessions over a JSON message protocol.

:class:`SessionEngine` is a transport-free state machine: feed it one decoded
client message, get back the list of reply documents in send order.  The
WebSocket server in :mod:`smootharap.server` is a thin wrapper; tests and the
determinism harness drive the engine directly, so a scripted message sequence
always produces the identical reply stream.

Protocol (schema version 1)
---------------------------
Every message is a JSON object with ``schema_version`` (int, currently 1),
``type`` (tag) and, on client messages, ``id`` — a strictly increasing
integer the server echoes in the single ``Ack`` or ``Error`` each request
receives.  Pushed documents (``MeshTopology``, ``Frame``) precede the ``Ack``
of the request that triggered them.  Vertex buffers travel as base64 of
little-endian float64 (positions) / uint32 (triangle indices).

Client → server: ``LoadMesh``, ``SetParams``, ``AddHandle``, ``MoveHandle``,
``RemoveHandle``, ``ResetPose``, ``Shutdown``.
Server → client: ``MeshTopology``, ``Frame``, ``Ack``, ``Error``.

``MoveHandle`` runs up to ``max_iter_per_frame`` local-global iterations from
the previous frame's positions and pushes one ``Frame``; handle insertion and
removal go through the updating constraint solver, so they never refactorize
the system matrix.  Changing ``lambda`` rebuilds the matrix and its
factorization (the matrix itself depends on it) and re-derives the constraint
columns.
"""

from __future__ import annotations

import base64
import io
import logging

import numpy as np

from .engine import RotationFit, _energies, _fit_field, _rhs_and_parts, build_context
from .errors import (
    DegenerateTriangle,
    DuplicateConstraint,
    InconsistentOrientation,
    InvalidParam,
    NonManifold,
    NotConstrained,
    ParseError,
    ProtocolError,
    SmoothArapError,
)
from .linear import UpdatingSolver, factorize
from .mesh import build_halfedge
from .meshio import load_mesh

log = logging.getLogger(__name__)

__all__ = [
    "SCHEMA_VERSION",
    "SessionEngine",
    "encode_float_array",
    "decode_float_array",
    "encode_index_array",
    "decode_index_array",
]

SCHEMA_VERSION = 1

#: Client message tags and the payload fields each may carry.
_CLIENT_FIELDS = {
    "LoadMesh": ("format", "payload", "generator"),
    "SetParams": ("lambda", "tolerance", "max_iter_per_frame"),
    "AddHandle": ("vertex",),
    "MoveHandle": ("vertex", "position"),
    "RemoveHandle": ("vertex",),
    "ResetPose": (),
    "Shutdown": (),
}

_ENVELOPE_FIELDS = ("schema_version", "id", "type")


def encode_float_array(a: np.ndarray) -> str:
    """Base64 of the array's little-endian float64 bytes (C order)."""
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def decode_float_array(s: str, columns: int = 3) -> np.ndarray:
    data = np.frombuffer(base64.b64decode(s), dtype="<f8")
    return data.reshape(-1, columns).astype(np.float64)


def encode_index_array(a: np.ndarray) -> str:
    """Base64 of the array's little-endian uint32 bytes (C order)."""
    return base64.b64encode(np.ascontiguousarray(a, dtype="<u4").tobytes()).decode("ascii")


def decode_index_array(s: str, columns: int = 3) -> np.ndarray:
    data = np.frombuffer(base64.b64decode(s), dtype="<u4")
    return data.reshape(-1, columns).astype(np.int64)


class SessionEngine:
    """One interactive deformation session (no I/O; feed dicts, get dicts).

    State: the loaded mesh and its precomputed context, the current deformed
    positions (each frame starts from the previous frame's result), the
    updating constraint solver, and the solver parameters.  ``handle()``
    never raises for client mistakes — those become ``Error`` replies and the
    session keeps running.
    """

    def __init__(self):
        self.hem = None
        self.ctx = None
        self.solver: UpdatingSolver | None = None
        self.positions: np.ndarray | None = None
        self.lam = 0.95
        self.tolerance = 1e-4
        self.max_iter_per_frame = 4
        self.epsilon = 1e-8
        self.frame_counter = 0
        self.refactorizations = 0
        self.closed = False
        self._last_id: int | None = None
        self._last_energies = (0.0, 0.0, 0.0)

    # -- public entry point -------------------------------------------------

    def handle(self, message) -> list[dict]:
        """Process one client message; return replies in send order."""
        request_id = message.get("id") if isinstance(message, dict) else None
        if not isinstance(request_id, int) or isinstance(request_id, bool):
            request_id = None
        try:
            tag, fields = self._check_envelope(message)
            pushes = getattr(self, f"_on_{_snake(tag)}")(fields)
            return [*pushes, self._reply("Ack", id=message["id"])]
        except ProtocolError as exc:
            return [self._reply("Error", id=request_id, code=exc.code, message=str(exc))]
        except SmoothArapError as exc:
            log.info("session request %r failed: %s", request_id, exc)
            return [
                self._reply(
                    "Error", id=request_id, code=_ERROR_CODES.get(type(exc), "internal-error"),
                    message=str(exc),
                )
            ]

    # -- envelope and reply plumbing ----------------------------------------

    def _check_envelope(self, message):
        if self.closed:
            raise ProtocolError("session-closed", "session has shut down")
        if not isinstance(message, dict):
            raise ProtocolError("bad-envelope", "message must be a JSON object")
        version = message.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ProtocolError(
                "bad-envelope", f"schema_version must be {SCHEMA_VERSION}, got {version!r}"
            )
        tag = message.get("type")
        if tag not in _CLIENT_FIELDS:
            raise ProtocolError("unknown-type", f"unknown message type {tag!r}")
        request_id = message.get("id")
        if not isinstance(request_id, int) or isinstance(request_id, bool):
            raise ProtocolError("bad-request-id", "id must be an integer")
        if self._last_id is not None and request_id <= self._last_id:
            raise ProtocolError(
                "bad-request-id",
                f"id must increase monotonically ({request_id} after {self._last_id})",
            )
        self._last_id = request_id
        allowed = set(_CLIENT_FIELDS[tag]) | set(_ENVELOPE_FIELDS)
        unknown = sorted(set(message) - allowed)
        if unknown:
            raise ProtocolError("bad-params", f"unknown field(s) for {tag}: {', '.join(unknown)}")
        fields = {k: message[k] for k in _CLIENT_FIELDS[tag] if k in message}
        return tag, fields

    @staticmethod
    def _reply(tag: str, **fields) -> dict:
        return {"schema_version": SCHEMA_VERSION, "type": tag, **fields}

    def _require_mesh(self):
        if self.hem is None:
            raise ProtocolError("no-mesh", "no mesh loaded in this session")

    def _checked_vertex(self, fields) -> int:
        vertex = fields.get("vertex")
        if not isinstance(vertex, int) or isinstance(vertex, bool):
            raise ProtocolError("bad-params", "vertex must be an integer")
        if not 0 <= vertex < self.hem.num_vertices:
            raise ProtocolError(
                "vertex-out-of-range",
                f"vertex {vertex} out of range [0, {self.hem.num_vertices})",
            )
        return vertex

    # -- message handlers ----------------------------------------------------

    def _on_load_mesh(self, fields) -> list[dict]:
        has_payload = "payload" in fields
        has_generator = "generator" in fields
        if has_payload == has_generator:
            raise ProtocolError("bad-params", "LoadMesh needs exactly one of payload/generator")
        if has_payload:
            fmt = fields.get("format")
            if fmt not in ("obj", "off"):
                raise ProtocolError("bad-params", f"format must be 'obj' or 'off', got {fmt!r}")
            payload = fields["payload"]
            if not isinstance(payload, str):
                raise ProtocolError("bad-params", "payload must be a string")
            mesh = load_mesh(io.StringIO(payload), fmt)
        else:
            gen = fields["generator"]
            if not isinstance(gen, dict):
                raise ProtocolError("bad-params", "generator must be an object")
            unknown = sorted(set(gen) - {"kind", "resolution", "params"})
            if unknown:
                raise ProtocolError("bad-params", f"unknown generator field(s): {', '.join(unknown)}")
            from .generators import make_test_mesh

            try:
                mesh = make_test_mesh(
                    gen.get("kind"), gen.get("resolution"), gen.get("params")
                )
            except InvalidParam as exc:
                raise ProtocolError("bad-params", str(exc)) from exc
        hem = build_halfedge(mesh)  # NonManifold and friends surface as Error
        self.hem = hem
        self._rebuild_system(constraints=None)
        self.positions = hem.positions.copy()
        self._last_energies = (0.0, 0.0, 0.0)
        return [
            self._reply(
                "MeshTopology",
                num_vertices=hem.num_vertices,
                num_triangles=len(hem.triangles),
                triangles=encode_index_array(hem.triangles),
                positions=encode_float_array(hem.positions),
            )
        ]

    def _on_set_params(self, fields) -> list[dict]:
        lam = fields.get("lambda")
        if lam is not None:
            if isinstance(lam, bool) or not isinstance(lam, (int, float)):
                raise ProtocolError("bad-params", "lambda must be a number")
            if not 0.0 <= lam < 1.0:
                raise ProtocolError("bad-params", f"lambda must be in [0, 1), got {lam}")
        tolerance = fields.get("tolerance")
        if tolerance is not None:
            if isinstance(tolerance, bool) or not isinstance(tolerance, (int, float)):
                raise ProtocolError("bad-params", "tolerance must be a number")
            if tolerance <= 0:
                raise ProtocolError("bad-params", "tolerance must be positive")
        per_frame = fields.get("max_iter_per_frame")
        if per_frame is not None:
            if isinstance(per_frame, bool) or not isinstance(per_frame, int) or per_frame < 1:
                raise ProtocolError("bad-params", "max_iter_per_frame must be an integer >= 1")
        if tolerance is not None:
            self.tolerance = float(tolerance)
        if per_frame is not None:
            self.max_iter_per_frame = per_frame
        if lam is not None and float(lam) != self.lam:
            self.lam = float(lam)
            if self.hem is not None:
                # the system matrix depends on lambda: rebuild + refactorize,
                # re-deriving the constraint columns for the new factor
                self._rebuild_system(constraints=self.solver.constraints)
        return []

    def _on_add_handle(self, fields) -> list[dict]:
        self._require_mesh()
        vertex = self._checked_vertex(fields)
        try:
            # a new handle pins the vertex where it currently sits
            self.solver.add_constraint(vertex, self.positions[vertex])
        except DuplicateConstraint as exc:
            raise ProtocolError("duplicate-handle", str(exc)) from exc
        return []

    def _on_move_handle(self, fields) -> list[dict]:
        self._require_mesh()
        vertex = self._checked_vertex(fields)
        position = fields.get("position")
        if (
            not isinstance(position, list)
            or len(position) != 3
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in position)
        ):
            raise ProtocolError("bad-params", "position must be an array of 3 numbers")
        try:
            self.solver.set_target(vertex, [float(c) for c in position])
        except NotConstrained as exc:
            raise ProtocolError("not-a-handle", str(exc)) from exc
        ran = self._run_frame_iterations()
        return [self._frame(ran)]

    def _on_remove_handle(self, fields) -> list[dict]:
        self._require_mesh()
        vertex = self._checked_vertex(fields)
        try:
            self.solver.remove_constraint(vertex)
        except NotConstrained as exc:
            raise ProtocolError("not-a-handle", str(exc)) from exc
        return []

    def _on_reset_pose(self, fields) -> list[dict]:
        self._require_mesh()
        self.positions = self.hem.positions.copy()
        for vertex in self.solver.constraints.indices:
            self.solver.set_target(int(vertex), self.hem.positions[int(vertex)])
        rotations = _fit_field(self.ctx, self.positions, RotationFit.EDGE_ONLY)
        _, b_arap, rotated_ell = _rhs_and_parts(self.ctx, rotations)
        self._last_energies = _energies(self.ctx, self.positions, b_arap, rotated_ell)
        return [self._frame(iterations_run=0)]

    def _on_shutdown(self, fields) -> list[dict]:
        self.closed = True
        return []

    # -- solver plumbing ------------------------------------------------------

    def _rebuild_system(self, constraints) -> None:
        """(Re)build context + factorization; carries constraints over."""
        self.ctx = build_context(self.hem, lam=self.lam, epsilon=self.epsilon)
        factor = factorize(self.ctx.system_reg, self.epsilon)
        self.refactorizations += 1
        self.solver = UpdatingSolver(factor, constraints)

    def _run_frame_iterations(self) -> int:
        """Up to ``max_iter_per_frame`` local-global iterations from the
        previous frame's positions; stops early once the largest per-vertex
        step falls under the convergence tolerance."""
        ran = 0
        for _ in range(self.max_iter_per_frame):
            rotations = _fit_field(self.ctx, self.positions, RotationFit.EDGE_ONLY)
            rhs, b_arap, rotated_ell = _rhs_and_parts(self.ctx, rotations)
            new_positions = self.solver.kkt_solve(rhs, self.positions)
            self._last_energies = _energies(self.ctx, new_positions, b_arap, rotated_ell)
            step = np.sqrt(((new_positions - self.positions) ** 2).sum(axis=1).max())
            self.positions = new_positions
            ran += 1
            if step / self.ctx.bbox < self.tolerance:
                break
        return ran

    def _frame(self, iterations_run: int) -> dict:
        self.frame_counter += 1
        total, arap, smooth = self._last_energies
        return self._reply(
            "Frame",
            iteration=self.frame_counter,
            iterations_run=iterations_run,
            positions=encode_float_array(self.positions),
            energies={"total": total, "arap": arap, "smooth": smooth},
        )


def _snake(tag: str) -> str:
    out = []
    for ch in tag:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


# SmoothArapError subclasses arising from client data, mapped to wire codes.
_ERROR_CODES = {
    ParseError: "parse-error",
    NonManifold: "non-manifold",
    InconsistentOrientation: "non-manifold",
    DegenerateTriangle: "degenerate-mesh",
    InvalidParam: "bad-params",
    DuplicateConstraint: "duplicate-handle",
    NotConstrained: "not-a-handle",
}
