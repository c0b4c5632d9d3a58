"""Exception hierarchy for the smootharap package.

Every error raised deliberately by this package derives from
:class:`SmoothArapError`, so callers can catch one type at the boundary.
"""


class SmoothArapError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SmoothArapError):
    """Mesh file (or JSON document) could not be parsed."""


class NonManifold(SmoothArapError):
    """Mesh connectivity is not manifold (edge with >2 faces, bowtie vertex)."""


class InconsistentOrientation(SmoothArapError):
    """Two triangles traverse a shared edge in the same direction."""


class DegenerateTriangle(SmoothArapError):
    """Triangle area below the degeneracy threshold at operator assembly."""


class InvalidParam(SmoothArapError):
    """Invalid or out-of-range parameter value."""


class NotPositiveDefinite(SmoothArapError):
    """Factorization failed; matrix is not positive definite (or not symmetric)."""


class SingularSystem(SmoothArapError):
    """A reduced linear system is singular."""


class DuplicateConstraint(SmoothArapError):
    """Vertex is already constrained."""


class NotConstrained(SmoothArapError):
    """Vertex is not in the active constraint set."""


class SingularConstraintBlock(SmoothArapError):
    """The dense Lagrange-multiplier block is singular."""


class NonFinite(SmoothArapError):
    """Energy or positions became NaN/Inf during optimization."""


class ConfigError(SmoothArapError):
    """Job/bench configuration document is malformed or has unknown fields."""


class ProtocolError(SmoothArapError):
    """Session message violates the protocol.

    Carries a short machine-readable ``code`` used in Error replies.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
