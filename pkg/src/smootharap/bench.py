"""Timing harness: factorization / handle-add / solve benchmarks.

Reproduces two trends as machine-independent comparisons (absolute times are
hardware-dependent and deliberately not asserted anywhere):

* adding a handle through the updating constraint solver is far cheaper than
  refactorizing the system matrix, and
* the blended energy (lambda = 0.95) needs fewer local-global iterations than
  pure rigidity (lambda = 0) on the bent cylinder, while the bar behaves the
  opposite way depending on initialization.

All reported times are wall-clock medians of ``repeats`` runs (>= 5 by
default); the factorization is warmed before solve timings so one-time JIT
and symbolic-analysis costs stay out of the numbers.  Reports serialize to
JSON and CSV next to a machine descriptor.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import platform
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .config import _reject_unknown  # shared strict-parsing helper
from .engine import DeformParams, build_context, deform
from .errors import ConfigError, ParseError
from .generators import KINDS, make_test_mesh
from .linear import ConstraintSet, UpdatingSolver, factorize
from .mesh import HalfEdgeMesh, build_halfedge

log = logging.getLogger(__name__)

__all__ = [
    "BenchConfig",
    "BenchReport",
    "HandleRow",
    "SolveRow",
    "experiment_constraints",
    "load_bench_config",
    "machine_descriptor",
    "run_bench",
    "time_handle_add",
]

#: Bench defaults: one mesh per generator family the trends are stated on.
_DEFAULT_MESHES = (
    ("bumpy_plane", 15),
    ("bumpy_cylinder", 16),
    ("bar", 6),
)


def machine_descriptor() -> dict:
    """What this report was measured on (recorded, never asserted)."""
    import scipy

    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "jit_kernels": bool(_kernels.HAVE_NUMBA),
    }


@dataclass(frozen=True)
class SolveRow:
    """One mesh/method timing row: sizes, times, iteration count."""

    mesh: str
    vertices: int
    faces: int
    method: str  # "classic" (lambda=0) or "smooth" (lambda=0.95)
    factorization_ms: float
    solve_ms: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class HandleRow:
    """Handle-insertion timing row for one constraint-update strategy."""

    mesh: str
    vertices: int
    mode: str  # "refactorize" or "updating"
    add_ms: float


@dataclass
class BenchReport:
    machine: dict
    repeats: int
    solve_rows: list = field(default_factory=list)
    handle_rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "machine": self.machine,
            "repeats": self.repeats,
            "solve": [asdict(r) for r in self.solve_rows],
            "handle_add": [asdict(r) for r in self.handle_rows],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        """Flat CSV: one section per table, tagged by the ``table`` column."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["table", "mesh", "vertices", "faces", "method",
                 "factorization_ms", "solve_ms", "iterations", "converged"]
            )
            for r in self.solve_rows:
                writer.writerow(
                    ["solve", r.mesh, r.vertices, r.faces, r.method,
                     f"{r.factorization_ms:.3f}", f"{r.solve_ms:.3f}",
                     r.iterations, r.converged]
                )
            for r in self.handle_rows:
                writer.writerow(
                    ["handle_add", r.mesh, r.vertices, "", r.mode,
                     "", f"{r.add_ms:.3f}", "", ""]
                )


@dataclass(frozen=True)
class BenchConfig:
    repeats: int = 5
    meshes: tuple = _DEFAULT_MESHES
    handle_mesh: tuple = ("bumpy_plane", 41)


def load_bench_config(path) -> BenchConfig:
    """Read a bench config; all fields optional, unknown fields rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("bench config must be a JSON object")
    _reject_unknown(doc, ("repeats", "meshes", "handle_mesh"), "bench config")
    repeats = doc.get("repeats", 5)
    if not isinstance(repeats, int) or isinstance(repeats, bool) or repeats < 5:
        raise ConfigError("repeats must be an integer >= 5 (times are medians)")

    def as_pair(entry, where):
        if (
            not isinstance(entry, dict)
            or set(entry) - {"kind", "resolution"}
            or entry.get("kind") not in KINDS
            or not isinstance(entry.get("resolution"), int)
        ):
            raise ConfigError(f"{where} must be {{kind, resolution}} with a known kind")
        return entry["kind"], entry["resolution"]

    meshes = doc.get("meshes")
    if meshes is None:
        mesh_pairs = _DEFAULT_MESHES
    else:
        if not isinstance(meshes, list) or not meshes:
            raise ConfigError("meshes must be a non-empty array")
        mesh_pairs = tuple(as_pair(m, f"meshes[{i}]") for i, m in enumerate(meshes))
    handle_mesh = doc.get("handle_mesh")
    handle_pair = (
        BenchConfig().handle_mesh if handle_mesh is None else as_pair(handle_mesh, "handle_mesh")
    )
    return BenchConfig(repeats=repeats, meshes=mesh_pairs, handle_mesh=handle_pair)


# -- canonical experiments ----------------------------------------------------


def _axis_band(hem: HalfEdgeMesh, top: bool) -> np.ndarray:
    """Vertices of the extreme-z ring (cylinder cap / bar end)."""
    z = hem.positions[:, 2]
    ref = z.max() if top else z.min()
    return np.flatnonzero(np.abs(z - ref) <= 1e-9 * max(1.0, abs(ref)))


def _rot_x(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def experiment_constraints(kind: str, hem: HalfEdgeMesh) -> ConstraintSet:
    """The canonical handle setup used for timing and trend comparisons.

    * planes: boundary ring fixed, the central vertex pulled 0.3 bbox along +z;
    * cylinder: bottom cap fixed, top cap rotated 90 degrees about x through
      its centroid and shifted sideways (a bend);
    * bar: one end fixed, the other rotated 90 degrees about x through its
      centroid (a pure bend, no offset).
    """
    V = hem.positions
    bbox = hem.mesh.bbox_diagonal
    if kind.endswith("plane"):
        boundary = np.flatnonzero(hem.boundary_vertex)
        center = int(np.argmin(np.linalg.norm(V - V.mean(axis=0), axis=1)))
        idx = np.append(boundary, center)
        targets = V[idx].copy()
        targets[-1, 2] += 0.3 * bbox
        return ConstraintSet(idx, targets)
    if kind in ("bumpy_cylinder", "bar"):
        bottom = _axis_band(hem, top=False)
        top = _axis_band(hem, top=True)
        centroid = V[top].mean(axis=0)
        length = V[:, 2].max() - V[:, 2].min()
        bent = (V[top] - centroid) @ _rot_x(np.pi / 2.0).T + centroid
        if kind == "bumpy_cylinder":
            bent += np.array([0.0, 0.35 * length, -0.1 * length])
        idx = np.concatenate([bottom, top])
        targets = np.vstack([V[bottom], bent])
        return ConstraintSet(idx, targets)
    raise ConfigError(f"no canonical experiment for mesh kind {kind!r}")


# -- timing primitives --------------------------------------------------------


def _median_ms(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def time_handle_add(ctx, constraints: ConstraintSet, vertex: int, repeats: int = 5):
    """Median ms to add one handle: full refactorize vs. updating solver.

    The refactorize strategy pays a fresh factorization of the regularized
    system (what a substitution solver must do when its constraint set
    changes); the updating strategy pays one sparse substitution to append a
    column of Q.  Returns ``(refactorize_ms, updating_ms)``.
    """
    target = ctx.hem.positions[vertex]
    refactor_ms = _median_ms(lambda: factorize(ctx.system_reg, ctx.epsilon), repeats)

    base = factorize(ctx.system_reg, ctx.epsilon)
    solver = UpdatingSolver(base, constraints)

    def add_and_undo():
        solver.add_constraint(vertex, target)
        solver.remove_constraint(vertex)  # column drop, no solve

    updating_ms = _median_ms(add_and_undo, repeats)
    return refactor_ms, updating_ms


def _solve_rows_for(kind: str, resolution: int, repeats: int) -> list:
    mesh = make_test_mesh(kind, resolution)
    hem = build_halfedge(mesh)
    constraints = experiment_constraints(kind, hem)
    rows = []
    for method, lam in (("classic", 0.0), ("smooth", 0.95)):
        ctx = build_context(hem, lam=lam)
        fact_ms = _median_ms(lambda: factorize(ctx.system_reg, ctx.epsilon), repeats)
        params = DeformParams(lam=lam, max_iterations=2000)
        result = None

        def run():
            nonlocal result
            result = deform(hem, constraints, params)

        run()  # warm caches (JIT, BLAS) before the timed runs
        solve_ms = _median_ms(run, repeats)
        rows.append(
            SolveRow(
                mesh=f"{kind}/{resolution}",
                vertices=hem.num_vertices,
                faces=len(hem.triangles),
                method=method,
                factorization_ms=fact_ms,
                solve_ms=solve_ms,
                iterations=result.iterations,
                converged=result.converged,
            )
        )
        log.info(
            "bench %s %s: %d iterations, %.1f ms solve", kind, method,
            result.iterations, solve_ms,
        )
    return rows


def run_bench(config: BenchConfig) -> BenchReport:
    """Run the full benchmark matrix described by ``config``."""
    report = BenchReport(machine=machine_descriptor(), repeats=config.repeats)
    for kind, resolution in config.meshes:
        report.solve_rows.extend(_solve_rows_for(kind, resolution, config.repeats))
    kind, resolution = config.handle_mesh
    hem = build_halfedge(make_test_mesh(kind, resolution))
    ctx = build_context(hem, lam=0.95)
    constraints = experiment_constraints(kind, hem)
    free = np.setdiff1d(np.arange(hem.num_vertices), constraints.indices)
    vertex = int(free[len(free) // 2])
    refactor_ms, updating_ms = time_handle_add(ctx, constraints, vertex, config.repeats)
    report.handle_rows.append(
        HandleRow(mesh=f"{kind}/{resolution}", vertices=hem.num_vertices,
                  mode="refactorize", add_ms=refactor_ms)
    )
    report.handle_rows.append(
        HandleRow(mesh=f"{kind}/{resolution}", vertices=hem.num_vertices,
                  mode="updating", add_ms=updating_ms)
    )
    return report
