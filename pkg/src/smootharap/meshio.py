"""ASCII OBJ/OFF triangle-mesh readers and writers.

Only triangle faces are accepted — quads and larger polygons raise
:class:`~smootharap.errors.ParseError` rather than being triangulated.
Normals, texture coordinates and colors are ignored on read and never
written.  Floats are written with ``%.17g`` so a write/read round trip
reproduces every position bit for bit.
"""

from __future__ import annotations

import io
import os
from typing import Union

import numpy as np

from .errors import InvalidParam, ParseError
from .mesh import TriangleMesh

Source = Union[str, os.PathLike, bytes, io.IOBase]

_FORMATS = ("obj", "off")


def _as_text(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="ascii") as fh:
            return fh.read()
    if isinstance(source, bytes):
        return source.decode("ascii")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return data


def _infer_format(source: Source, fmt: str | None) -> str:
    if fmt is not None:
        f = fmt.lower()
        if f not in _FORMATS:
            raise InvalidParam(f"unknown mesh format {fmt!r}; expected one of {_FORMATS}")
        return f
    if isinstance(source, (str, os.PathLike)):
        ext = os.path.splitext(os.fspath(source))[1].lower().lstrip(".")
        if ext in _FORMATS:
            return ext
    raise InvalidParam("mesh format not given and could not be inferred from the path")


def load_mesh(source: Source, fmt: str | None = None) -> TriangleMesh:
    """Load a triangle mesh from a path, byte string, or open stream.

    Parameters
    ----------
    source
        File path, raw bytes, or a readable stream.
    fmt
        ``"obj"`` or ``"off"``; inferred from the path extension when omitted.
    """
    f = _infer_format(source, fmt)
    text = _as_text(source)
    positions, triangles = _parse_obj(text) if f == "obj" else _parse_off(text)
    try:
        return TriangleMesh(positions=positions, triangles=triangles)
    except InvalidParam as exc:
        raise ParseError(str(exc)) from exc


def save_mesh(mesh: TriangleMesh, dest: Union[str, os.PathLike, io.IOBase], fmt: str | None = None) -> None:
    """Write ``mesh`` as ASCII OBJ or OFF."""
    if fmt is None and isinstance(dest, io.IOBase):
        raise InvalidParam("mesh format must be given when writing to a stream")
    f = _infer_format(dest if fmt is None else "", fmt)
    text = _format_obj(mesh) if f == "obj" else _format_off(mesh)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        dest.write(text)


def _parse_float(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: expected a number, got {token!r}") from None


def _parse_obj(text: str):
    positions: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError(f"line {lineno}: vertex line needs 3 coordinates")
            positions.append([_parse_float(t, lineno) for t in parts[1:4]])
        elif tag == "f":
            corners = parts[1:]
            if len(corners) != 3:
                raise ParseError(
                    f"line {lineno}: face has {len(corners)} corners; only triangles are supported"
                )
            idx = []
            for token in corners:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad face index {token!r}") from None
                if i <= 0:
                    raise ParseError(f"line {lineno}: face indices must be positive (1-based)")
                idx.append(i - 1)
            faces.append(idx)
        # every other tag (vn, vt, usemtl, o, g, s, mtllib, ...) is ignored
    return np.asarray(positions, dtype=np.float64).reshape(-1, 3), \
        np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def _parse_off(text: str):
    tokens_by_line = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens_by_line.append((lineno, line.split()))
    if not tokens_by_line:
        raise ParseError("empty OFF document")
    lineno, header = tokens_by_line[0]
    rest = tokens_by_line[1:]
    if header[0].upper() != "OFF":
        raise ParseError(f"line {lineno}: missing OFF header")
    if len(header) > 1:  # counts may share the header line
        rest = [(lineno, header[1:])] + rest
    if not rest:
        raise ParseError("OFF document ends before the counts line")
    lineno, counts = rest[0]
    if len(counts) < 2:
        raise ParseError(f"line {lineno}: counts line needs vertex and face counts")
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
    except ValueError:
        raise ParseError(f"line {lineno}: bad counts line") from None
    body = rest[1:]
    if len(body) < n_vertices + n_faces:
        raise ParseError(
            f"OFF document declares {n_vertices} vertices and {n_faces} faces "
            f"but provides only {len(body)} data lines"
        )
    positions = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        lineno, toks = body[i]
        if len(toks) < 3:
            raise ParseError(f"line {lineno}: vertex line needs 3 coordinates")
        positions[i] = [_parse_float(t, lineno) for t in toks[:3]]
    triangles = np.empty((n_faces, 3), dtype=np.int64)
    for i in range(n_faces):
        lineno, toks = body[n_vertices + i]
        try:
            arity = int(toks[0])
        except (ValueError, IndexError):
            raise ParseError(f"line {lineno}: bad face line") from None
        if arity != 3:
            raise ParseError(
                f"line {lineno}: face has {arity} corners; only triangles are supported"
            )
        if len(toks) < 4:
            raise ParseError(f"line {lineno}: face line needs 3 indices")
        try:
            triangles[i] = [int(t) for t in toks[1:4]]
        except ValueError:
            raise ParseError(f"line {lineno}: bad face index") from None
    return positions, triangles


def _format_obj(mesh: TriangleMesh) -> str:
    out = []
    for x, y, z in mesh.positions:
        out.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    for a, b, c in mesh.triangles:
        out.append(f"f {a + 1} {b + 1} {c + 1}")
    out.append("")
    return "\n".join(out)


def _format_off(mesh: TriangleMesh) -> str:
    out = ["OFF", f"{mesh.num_vertices} {mesh.num_triangles} 0"]
    for x, y, z in mesh.positions:
        out.append(f"{x:.17g} {y:.17g} {z:.17g}")
    for a, b, c in mesh.triangles:
        out.append(f"3 {a} {b} {c}")
    out.append("")
    return "\n".join(out)
