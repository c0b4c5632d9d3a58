"""Strict JSON job configuration for the batch CLI.

A job document describes one deformation run: the mesh (a file path or a
generator spec), solver parameters, the handle list, and output paths.
Parsing is strict — unknown fields anywhere in the document are rejected so
typos fail loudly instead of silently running with defaults.

JSON syntax errors raise :class:`~smootharap.errors.ParseError`; documents
that are valid JSON but not a valid job raise
:class:`~smootharap.errors.ConfigError`.  The machine-readable schema lives
in ``docs/jobconfig.schema.json``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .engine import DeformParams
from .errors import ConfigError, InvalidParam, ParseError
from .generators import KINDS
from .linear import ConstraintSet
from .mesh import HalfEdgeMesh, TriangleMesh, build_halfedge
from .meshio import load_mesh

__all__ = [
    "GeneratorSpec",
    "MeshSpec",
    "JobConfig",
    "parse_job_config",
    "load_job_config",
    "load_job_mesh",
    "job_constraints",
]

#: JSON keys of ``params`` mapped onto :class:`DeformParams` fields.
_PARAM_KEYS = {
    "lambda": "lam",
    "epsilon": "epsilon",
    "max_iterations": "max_iterations",
    "tolerance": "tolerance",
    "rotation_fit": "rotation_fit",
    "constraint_mode": "constraint_mode",
    "init": "init",
}


def _reject_unknown(doc: dict, allowed, where: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ConfigError(f"missing required field {key!r} in {where}")
    return doc[key]


@dataclass(frozen=True)
class GeneratorSpec:
    """Synthetic-mesh request: kind, resolution, optional overrides."""

    kind: str
    resolution: int
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MeshSpec:
    """Where the job's mesh comes from: a file or a generator (exactly one)."""

    path: str | None = None
    fmt: str | None = None
    generator: GeneratorSpec | None = None


@dataclass(frozen=True)
class JobConfig:
    """One parsed deformation job.

    ``handles`` is kept as raw (vertex, target) pairs; index-range checking
    needs the mesh and happens in :func:`job_constraints` after loading.
    """

    mesh: MeshSpec
    params: DeformParams
    handles: tuple
    output_mesh: str | None = None
    output_report: str | None = None


def _parse_mesh_spec(doc, where: str = "mesh") -> MeshSpec:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    _reject_unknown(doc, ("path", "format", "generator"), where)
    has_path = "path" in doc
    has_gen = "generator" in doc
    if has_path == has_gen:
        raise ConfigError(f"{where} needs exactly one of 'path' or 'generator'")
    if has_path:
        path = doc["path"]
        if not isinstance(path, str) or not path:
            raise ConfigError(f"{where}.path must be a non-empty string")
        fmt = doc.get("format")
        if fmt is not None and fmt not in ("obj", "off"):
            raise ConfigError(f"{where}.format must be 'obj' or 'off', got {fmt!r}")
        return MeshSpec(path=path, fmt=fmt)
    gen = doc["generator"]
    if not isinstance(gen, dict):
        raise ConfigError(f"{where}.generator must be an object")
    _reject_unknown(gen, ("kind", "resolution", "params"), f"{where}.generator")
    kind = _require(gen, "kind", f"{where}.generator")
    if kind not in KINDS:
        raise ConfigError(f"unknown generator kind {kind!r}; expected one of {KINDS}")
    resolution = _require(gen, "resolution", f"{where}.generator")
    if not isinstance(resolution, int) or isinstance(resolution, bool) or resolution < 2:
        raise ConfigError(f"{where}.generator.resolution must be an integer >= 2")
    params = gen.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.generator.params must be an object")
    return MeshSpec(generator=GeneratorSpec(kind=kind, resolution=resolution, params=params))


def _parse_params(doc) -> DeformParams:
    if doc is None:
        return DeformParams().validate()
    if not isinstance(doc, dict):
        raise ConfigError("params must be an object")
    _reject_unknown(doc, _PARAM_KEYS, "params")
    kwargs = {}
    for json_key, attr in _PARAM_KEYS.items():
        if json_key not in doc:
            continue
        value = doc[json_key]
        if attr in ("lam", "epsilon", "tolerance"):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"params.{json_key} must be a number")
            value = float(value)
        elif attr == "max_iterations":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"params.{json_key} must be an integer")
        elif not isinstance(value, str):
            raise ConfigError(f"params.{json_key} must be a string")
        kwargs[attr] = value
    try:
        return DeformParams(**kwargs).validate()
    except (ValueError, InvalidParam) as exc:  # bad enum literal / range error
        raise ConfigError(str(exc)) from None


def _parse_handles(doc) -> tuple:
    if not isinstance(doc, list) or not doc:
        raise ConfigError("handles must be a non-empty array")
    pairs = []
    seen = set()
    for i, entry in enumerate(doc):
        where = f"handles[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where} must be an object")
        _reject_unknown(entry, ("vertex", "target"), where)
        vertex = _require(entry, "vertex", where)
        if not isinstance(vertex, int) or isinstance(vertex, bool) or vertex < 0:
            raise ConfigError(f"{where}.vertex must be a non-negative integer")
        if vertex in seen:
            raise ConfigError(f"{where}: vertex {vertex} listed twice")
        seen.add(vertex)
        target = _require(entry, "target", where)
        if (
            not isinstance(target, list)
            or len(target) != 3
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in target)
        ):
            raise ConfigError(f"{where}.target must be an array of 3 numbers")
        pairs.append((vertex, tuple(float(c) for c in target)))
    return tuple(pairs)


def _parse_output(doc) -> tuple[str | None, str | None]:
    if doc is None:
        return None, None
    if not isinstance(doc, dict):
        raise ConfigError("output must be an object")
    _reject_unknown(doc, ("mesh", "report"), "output")
    mesh = doc.get("mesh")
    report = doc.get("report")
    for name, value in (("mesh", mesh), ("report", report)):
        if value is not None and (not isinstance(value, str) or not value):
            raise ConfigError(f"output.{name} must be a non-empty string")
    return mesh, report


def parse_job_config(doc) -> JobConfig:
    """Validate a decoded JSON document into a :class:`JobConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("job config must be a JSON object")
    _reject_unknown(doc, ("mesh", "params", "handles", "output"), "job config")
    mesh = _parse_mesh_spec(_require(doc, "mesh", "job config"))
    params = _parse_params(doc.get("params"))
    handles = _parse_handles(_require(doc, "handles", "job config"))
    output_mesh, output_report = _parse_output(doc.get("output"))
    return JobConfig(
        mesh=mesh,
        params=params,
        handles=handles,
        output_mesh=output_mesh,
        output_report=output_report,
    )


def load_job_config(path: str | os.PathLike) -> JobConfig:
    """Read and parse a job config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_job_config(doc)


def load_job_mesh(spec: MeshSpec) -> TriangleMesh:
    """Materialize the mesh a :class:`MeshSpec` points at."""
    from .generators import make_test_mesh  # local import keeps module load light

    if spec.path is not None:
        return load_mesh(spec.path, spec.fmt)
    gen = spec.generator
    return make_test_mesh(gen.kind, gen.resolution, gen.params)


def job_constraints(config: JobConfig, hem: HalfEdgeMesh) -> ConstraintSet:
    """Turn the config's handle list into a constraint set, range-checked."""
    indices = np.array([v for v, _ in config.handles], dtype=np.int64)
    targets = np.array([t for _, t in config.handles], dtype=np.float64)
    out_of_range = indices[indices >= hem.num_vertices]
    if out_of_range.size:
        raise ConfigError(
            f"handle vertex {int(out_of_range[0])} out of range for a mesh "
            f"with {hem.num_vertices} vertices"
        )
    return ConstraintSet(indices, targets)


def build_halfedge_for_job(config: JobConfig) -> HalfEdgeMesh:
    """Convenience: load the job's mesh and build its half-edge structure."""
    return build_halfedge(load_job_mesh(config.mesh))
