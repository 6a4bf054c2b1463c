"""Exception hierarchy.

Argument and geometry problems derive from :class:`ValueError`; failures of a
numerical contract (eigensolver residuals, degenerate sampling) derive from
:class:`NumericalContractError` so callers can tell the two apart.
"""


class DegenerateGeometryError(ValueError):
    """A face has (numerically) zero area."""


class MeshTopologyError(ValueError):
    """Mesh is not a closed, consistently oriented triangle manifold."""

    def __init__(self, message, edges=()):
        self.edges = list(edges)
        if self.edges:
            listed = ", ".join(f"({a}, {b})" for a, b in self.edges[:20])
            more = "" if len(self.edges) <= 20 else f" ... ({len(self.edges)} total)"
            message = f"{message}: {listed}{more}"
        super().__init__(message)


class QuantizationError(ValueError):
    """Total prescribed flux is not an integer multiple of 2*pi."""


class BranchOverflowError(ValueError):
    """A face holonomy angle is too close to pi to be represented."""


class EmbeddingTooCoarseError(ValueError):
    """Adjacent projective points are (nearly) orthogonal."""

    def __init__(self, message, edge=None):
        self.edge = edge
        super().__init__(message)


class NumericalContractError(RuntimeError):
    """Base class for failures of a numerical postcondition."""


class NonQuantizedError(NumericalContractError):
    pass


class ConvergenceError(NumericalContractError):
    def __init__(self, message, worst_residual=None):
        self.worst_residual = worst_residual
        super().__init__(message)


class TruncationError(NumericalContractError):
    pass


class DegenerateSectionError(ValueError):
    """Section vanishes at a vertex or has an edge phase jump of pi."""


class DegenerateMeasureError(NumericalContractError):
    """Too many consecutive degenerate samples."""
