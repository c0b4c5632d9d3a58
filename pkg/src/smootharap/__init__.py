"""Smooth as-rigid-as-possible (ARAP) surface deformation.

A deformation engine blending the classical ARAP energy with a
Laplacian-vector rigidity term for higher-order continuity around point
handles, plus mesh IO, synthetic test meshes, constrained sparse solvers
with fast constraint updates, a batch/bench/trace CLI, and an interactive
JSON session service.
"""

from .errors import (
    ConfigError,
    DegenerateTriangle,
    DuplicateConstraint,
    InconsistentOrientation,
    InvalidParam,
    NonFinite,
    NonManifold,
    NotConstrained,
    NotPositiveDefinite,
    ParseError,
    ProtocolError,
    SingularConstraintBlock,
    SingularSystem,
    SmoothArapError,
)
from .energy import energy_arap, energy_smooth, energy_total
from .engine import (
    ConstraintMode,
    DeformParams,
    DeformResult,
    InitMode,
    RotationFit,
    assemble_rhs,
    assemble_system_matrix,
    build_context,
    deform,
    initialize,
)
from .config import (
    JobConfig,
    MeshSpec,
    job_constraints,
    load_job_config,
    load_job_mesh,
    parse_job_config,
)
from .generators import make_test_mesh
from .linear import ConstraintSet, UpdatingSolver, build_updating, factorize, regularize
from .mesh import HalfEdgeMesh, TriangleMesh, build_halfedge, k_ring, spokes_and_rims
from .meshio import load_mesh, save_mesh
from .operators import (
    DiscreteOperators,
    assemble_laplacian,
    laplacian_vector,
    laplacian_vectors,
    mean_curvature_magnitudes,
    vertex_areas,
)
from .rotations import RotationField, fit_rotation_edge_only, fit_rotation_full
from .session import SCHEMA_VERSION, SessionEngine

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstraintMode",
    "ConstraintSet",
    "DeformParams",
    "DeformResult",
    "DegenerateTriangle",
    "DiscreteOperators",
    "DuplicateConstraint",
    "HalfEdgeMesh",
    "InconsistentOrientation",
    "InitMode",
    "InvalidParam",
    "JobConfig",
    "MeshSpec",
    "NonFinite",
    "NonManifold",
    "NotConstrained",
    "NotPositiveDefinite",
    "ParseError",
    "ProtocolError",
    "RotationField",
    "RotationFit",
    "SCHEMA_VERSION",
    "SessionEngine",
    "SingularConstraintBlock",
    "SingularSystem",
    "SmoothArapError",
    "TriangleMesh",
    "UpdatingSolver",
    "assemble_laplacian",
    "assemble_rhs",
    "assemble_system_matrix",
    "build_context",
    "build_halfedge",
    "build_updating",
    "deform",
    "energy_arap",
    "energy_smooth",
    "energy_total",
    "factorize",
    "fit_rotation_edge_only",
    "fit_rotation_full",
    "initialize",
    "job_constraints",
    "k_ring",
    "laplacian_vector",
    "laplacian_vectors",
    "load_job_config",
    "load_job_mesh",
    "load_mesh",
    "make_test_mesh",
    "parse_job_config",
    "mean_curvature_magnitudes",
    "regularize",
    "save_mesh",
    "spokes_and_rims",
    "vertex_areas",
    "__version__",
]
