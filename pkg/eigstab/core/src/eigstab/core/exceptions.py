"""Numerical exception hierarchy."""


class EigstabError(Exception):
    """Base exception class for all numerical errors."""


class GeometryError(EigstabError):
    """Arises when a polygon or affine map is invalid."""


class InvalidPerturbationError(GeometryError):
    """Arises when a perturbation direction does not fit the polygon or the magnitude is negative."""


class InvalidPolygonError(GeometryError):
    """Arises when a polygon has too few vertices, non-finite coordinates or clockwise orientation."""


class SelfIntersectingError(GeometryError):
    """Arises when polygon edges cross or touch away from their shared vertices."""


class NonConvexError(GeometryError):
    """Arises when a fan from vertex 0 does not tile the polygon."""


class DegenerateTriangleError(GeometryError):
    """Arises when a triangle has (numerically) zero or negative area."""


class MeshError(EigstabError):
    """Arises when a mesh cannot be built, transported or queried."""


class NodeOutsideMacroError(MeshError):
    """Arises when a mesh node lies in none of the macro triangles."""


class InvertedElementError(MeshError):
    """Arises when an element has non-positive area."""


class NonConformingElementError(MeshError):
    """Arises when an element straddles macro triangles whose affine maps disagree."""


class OutsideDomainError(MeshError):
    """Arises when a point is farther than the tolerance from every element."""


class FemError(EigstabError):
    """Arises when finite element data do not fit together."""


class DimensionMismatchError(FemError):
    """Arises when vector or matrix dimensions do not agree."""


class MeshMismatchError(FemError):
    """Arises when functions live on different meshes."""


class SolverError(EigstabError):
    """Arises when an eigenvalue solve fails."""


class NoConvergenceError(SolverError):
    """Arises when the iterative solver misses its tolerance."""

    def __init__(self, message: str, iterations: int) -> None:
        """Record the iteration budget that was exhausted."""
        super().__init__(message)
        self.iterations = iterations


class NotPositiveDefiniteError(SolverError):
    """Arises when a matrix that must be positive definite is not."""


class SingularNError(SolverError):
    """Arises when the right-hand matrix of a small pencil is singular."""


class StabilizeError(EigstabError):
    """Arises when the cluster stabilization cannot proceed."""


class ZeroPerturbationError(StabilizeError):
    """Arises when a difference quotient is requested for t = 0."""


class RankDeficientBasisError(StabilizeError):
    """Arises when the perturbed cluster basis is (numerically) linearly dependent."""


class ComplexQuotientsError(StabilizeError):
    """Arises when the small pencil has eigenvalues with significant imaginary parts."""


class MetricsError(EigstabError):
    """Arises when a metric is undefined for its input."""


class ZeroFunctionError(MetricsError):
    """Arises when a norm-relative metric is evaluated on the zero function."""


class IndexOutOfRangeError(MetricsError):
    """Arises when an eigenvalue index is outside the given list."""
