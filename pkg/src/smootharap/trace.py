"""Per-iteration energy traces for convergence plots.

Runs the same deformation once per rotation-fitting variant (edge-only and
full) and writes one CSV per variant with columns
``iteration,total,arap,smooth`` — the inputs for convergence-behavior plots.
The built-in ``spiky-plane`` preset bends a plane with orthogonal spike
details, the setup where the two variants separate most visibly.
"""

from __future__ import annotations

import csv
import logging
import os

from .bench import experiment_constraints
from .config import JobConfig, build_halfedge_for_job, job_constraints
from .engine import DeformParams, RotationFit, deform
from .errors import ConfigError
from .generators import make_test_mesh
from .mesh import build_halfedge

log = logging.getLogger(__name__)

__all__ = ["PRESETS", "run_trace", "trace_preset_job"]

PRESETS = ("spiky-plane",)

_VARIANTS = (
    ("edgeonly", RotationFit.EDGE_ONLY),
    ("full", RotationFit.FULL),
)


def trace_preset_job(name: str):
    """Mesh + constraints + params for a named preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown trace preset {name!r}; expected one of {PRESETS}")
    hem = build_halfedge(make_test_mesh("spiky_plane", 13))
    constraints = experiment_constraints("spiky_plane", hem)
    params = DeformParams(lam=0.95, max_iterations=4000)
    return hem, constraints, params


def _write_trace_csv(path: str, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "total", "arap", "smooth"])
        for i, (total, arap, smooth) in enumerate(trace, start=1):
            writer.writerow([i, f"{total:.17g}", f"{arap:.17g}", f"{smooth:.17g}"])


def run_trace(out_dir: str, preset: str | None = None, config: JobConfig | None = None) -> list[str]:
    """Write one trace CSV per rotation-fitting variant; returns the paths."""
    if (preset is None) == (config is None):
        raise ConfigError("trace needs exactly one of a preset or a job config")
    if preset is not None:
        hem, constraints, params = trace_preset_job(preset)
    else:
        hem = build_halfedge_for_job(config)
        constraints = job_constraints(config, hem)
        params = config.params
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for label, fit in _VARIANTS:
        result = deform(hem, constraints, DeformParams(
            lam=params.lam,
            epsilon=params.epsilon,
            max_iterations=params.max_iterations,
            tolerance=params.tolerance,
            rotation_fit=fit,
            constraint_mode=params.constraint_mode,
            init=params.init,
        ))
        path = os.path.join(out_dir, f"trace_{label}.csv")
        _write_trace_csv(path, result.trace)
        log.info("trace %s: %d iterations (converged=%s) -> %s",
                 label, result.iterations, result.converged, path)
        paths.append(path)
    return paths
