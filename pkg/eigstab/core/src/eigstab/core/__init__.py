"""P1 finite elements and the stabilized computation of clustered Dirichlet eigenfunctions."""

from eigstab.core.eigensolve import EigenPair, EigenSolverOptions, SmallEigenPair, dense_gep, residual, smallest_pairs
from eigstab.core.fem import DofMap, FEFunction, SparseSym, assemble, assemble_full, evaluate, inner, norm
from eigstab.core.geometry import (
    AffineMap2,
    MacroTriangulation,
    PerturbationSpec,
    Point2,
    PolygonSpec,
    affine_from_triangles,
    fan_macro_triangulation,
    macro_maps,
    perturb_polygon,
)
from eigstab.core.mesh import MatchedMeshPair, MeshPattern, TriMesh, perturbed_pair, rect_mesh, transport, triangle_mesh
from eigstab.core.metrics import ReflectionAxis, antisymmetry, cross_orthogonality, difference_quotient, gap
from eigstab.core.stabilize import (
    ClusterSpec,
    ElementCoeffs,
    SmallSystem,
    StabilizedCluster,
    WeightMode,
    element_coeffs,
    stabilize_cluster,
)

__all__ = [
    "AffineMap2",
    "ClusterSpec",
    "DofMap",
    "EigenPair",
    "EigenSolverOptions",
    "ElementCoeffs",
    "FEFunction",
    "MacroTriangulation",
    "MatchedMeshPair",
    "MeshPattern",
    "PerturbationSpec",
    "Point2",
    "PolygonSpec",
    "ReflectionAxis",
    "SmallEigenPair",
    "SmallSystem",
    "SparseSym",
    "StabilizedCluster",
    "TriMesh",
    "WeightMode",
    "affine_from_triangles",
    "antisymmetry",
    "assemble",
    "assemble_full",
    "cross_orthogonality",
    "dense_gep",
    "difference_quotient",
    "element_coeffs",
    "evaluate",
    "fan_macro_triangulation",
    "gap",
    "inner",
    "macro_maps",
    "norm",
    "perturb_polygon",
    "perturbed_pair",
    "rect_mesh",
    "residual",
    "smallest_pairs",
    "stabilize_cluster",
    "transport",
    "triangle_mesh",
]
