"""Command-line interface: deform / bench / trace / serve.

Errors never escape as tracebacks: failures print a single machine-readable
JSON line to stderr —  ``{"error": "<ExceptionClass>", "message": "..."}`` —
and exit with code 2 for configuration mistakes (bad JSON, unknown fields,
out-of-range values) or 1 for runtime failures.  The log level comes from the
``SMOOTHARAP_LOG`` environment variable (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import build_halfedge_for_job, job_constraints, load_job_config
from .energy import energy_arap, energy_smooth, energy_total
from .engine import deform
from .errors import ConfigError, InvalidParam, ParseError, SmoothArapError
from .mesh import TriangleMesh
from .meshio import save_mesh
from .operators import assemble_laplacian

log = logging.getLogger(__name__)

#: Error classes that indicate a bad invocation rather than a runtime failure.
_CONFIG_ERRORS = (ConfigError, ParseError, InvalidParam)


def _setup_logging() -> None:
    level = os.environ.get("SMOOTHARAP_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def cmd_deform(args) -> int:
    config = load_job_config(args.config)
    hem = build_halfedge_for_job(config)
    constraints = job_constraints(config, hem)
    result = deform(hem, constraints, config.params)
    ops = assemble_laplacian(hem)
    e_arap = energy_arap(hem, ops, result.positions, result.rotations)
    e_smooth = energy_smooth(hem, ops, result.positions, result.rotations)
    report = {
        "vertices": hem.num_vertices,
        "triangles": len(hem.triangles),
        "lambda": config.params.lam,
        "iterations": result.iterations,
        "converged": result.converged,
        "energies": {
            "total": energy_total(config.params.lam, e_arap, e_smooth),
            "arap": e_arap,
            "smooth": e_smooth,
        },
    }
    if config.output_mesh:
        deformed = TriangleMesh(positions=result.positions, triangles=hem.triangles.copy())
        save_mesh(deformed, config.output_mesh)
        log.info("wrote %s", config.output_mesh)
    if config.output_report:
        with open(config.output_report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        log.info("wrote %s", config.output_report)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_bench(args) -> int:
    from .bench import BenchConfig, load_bench_config, run_bench

    config = load_bench_config(args.config) if args.config else BenchConfig()
    report = run_bench(config)
    stem, ext = os.path.splitext(args.out)
    if ext not in ("", ".json", ".csv"):
        raise ConfigError(f"--out must be a stem or end in .json/.csv, got {args.out!r}")
    json_path, csv_path = stem + ".json", stem + ".csv"
    report.write_json(json_path)
    report.write_csv(csv_path)
    print(f"wrote {json_path} and {csv_path}")
    return 0


def cmd_trace(args) -> int:
    from .config import load_job_config as load_cfg
    from .trace import run_trace

    config = load_cfg(args.config) if args.config else None
    paths = run_trace(args.out, preset=args.preset, config=config)
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    from .server import run_server

    run_server(host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smootharap",
        description="Smooth as-rigid-as-possible surface deformation toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_deform = sub.add_parser("deform", help="run one batch deformation job")
    p_deform.add_argument("--config", required=True, help="job config JSON path")
    p_deform.set_defaults(fn=cmd_deform)

    p_bench = sub.add_parser("bench", help="run the timing benchmark matrix")
    p_bench.add_argument("--config", help="bench config JSON path (optional)")
    p_bench.add_argument("--out", required=True,
                         help="output stem; writes <stem>.json and <stem>.csv")
    p_bench.set_defaults(fn=cmd_bench)

    p_trace = sub.add_parser("trace", help="write per-iteration energy CSVs")
    group = p_trace.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=["spiky-plane"], help="built-in experiment")
    group.add_argument("--config", help="job config JSON path")
    p_trace.add_argument("--out", required=True, help="output directory")
    p_trace.set_defaults(fn=cmd_trace)

    p_serve = sub.add_parser("serve", help="serve the interactive session protocol")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SmoothArapError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2 if isinstance(exc, _CONFIG_ERRORS) else 1


if __name__ == "__main__":
    sys.exit(main())
