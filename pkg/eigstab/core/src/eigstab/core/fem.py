"""P1 Lagrange finite elements: local matrices, assembly, Dirichlet elimination and FE functions.

All element integrals are exact closed forms. Global matrices are assembled from
COO triplets in element order, so entry values are reproducible for a fixed mesh.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import sparse

from eigstab.core.exceptions import DegenerateTriangleError, DimensionMismatchError, FemError, MeshMismatchError
from eigstab.core.geometry import DEGENERACY_TOL, FloatArray, IntArray, Point2, PointsLike, as_coordinates
from eigstab.core.mesh import TriMesh

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-14
_MASS_PATTERN = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def element_gradients(corners: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Constant gradients of the three hat functions and the signed areas.

    Args:
        corners: Triangle corners, shape (m, 3, 2).

    Returns:
        Gradients with shape (m, 3, 2) and signed areas with shape (m,).
    """
    x = corners[..., 0]
    y = corners[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    grads = np.empty(corners.shape, dtype=np.float64)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = y[:, b] - y[:, c]
        grads[:, a, 1] = x[:, c] - x[:, b]
    grads /= (2.0 * area)[:, None, None]
    return grads, area


def _single_triangle(tri: PointsLike) -> FloatArray:
    corners = as_coordinates(tri)
    if corners.shape != (3, 2):
        raise FemError(f"a triangle needs three points, got shape {corners.shape}")
    diam = float(np.max(np.linalg.norm(corners[:, None] - corners[None], axis=-1)))
    _, area = element_gradients(corners[None])
    if area[0] <= DEGENERACY_TOL * diam**2:
        raise DegenerateTriangleError(f"triangle {corners.tolist()} has non-positive area")
    return corners


def local_stiffness(tri: PointsLike) -> FloatArray:
    """Element stiffness matrix area * G G^T of a counter-clockwise triangle."""
    grads, area = element_gradients(_single_triangle(tri)[None])
    return area[0] * grads[0] @ grads[0].T


def local_mass(tri: PointsLike) -> FloatArray:
    """Consistent element mass matrix (area/12) * [[2,1,1],[1,2,1],[1,1,2]]."""
    _, area = element_gradients(_single_triangle(tri)[None])
    return area[0] * _MASS_PATTERN


@dataclass(frozen=True, eq=False)
class DofMap:
    """Numbering of the interior (non-Dirichlet) nodes.

    ``interior_of_node`` holds -1 for boundary nodes.
    """

    interior_of_node: IntArray
    node_of_interior: IntArray

    @classmethod
    def from_mesh(cls, mesh: TriMesh) -> DofMap:
        """Number the interior nodes of mesh in increasing node order."""
        node_of_interior = mesh.interior_nodes
        interior_of_node = np.full(mesh.n_nodes, -1, dtype=np.int64)
        interior_of_node[node_of_interior] = np.arange(node_of_interior.size)
        return cls(interior_of_node, np.array(node_of_interior, dtype=np.int64))

    @property
    def n_dofs(self) -> int:
        """Number of interior degrees of freedom."""
        return int(self.node_of_interior.size)

    @property
    def n_nodes(self) -> int:
        """Number of mesh nodes."""
        return int(self.interior_of_node.size)

    def restrict(self, values: FloatArray) -> FloatArray:
        """Interior entries of a node-level vector."""
        if values.shape[0] != self.n_nodes:
            raise DimensionMismatchError(f"expected {self.n_nodes} nodal values, got {values.shape[0]}")
        return values[self.node_of_interior]

    def extend(self, interior: FloatArray) -> FloatArray:
        """Node-level vector with zeros on the boundary."""
        if interior.shape[0] != self.n_dofs:
            raise DimensionMismatchError(f"expected {self.n_dofs} interior values, got {interior.shape[0]}")
        full = np.zeros((self.n_nodes, *interior.shape[1:]), dtype=interior.dtype)
        full[self.node_of_interior] = interior
        return full


@dataclass(frozen=True, eq=False)
class SparseSym:
    """A symmetric sparse matrix in CSR storage.

    When ``dofs`` is set the matrix acts on interior degrees of freedom, otherwise
    on all mesh nodes.
    """

    matrix: sparse.csr_matrix
    dofs: DofMap | None = None
    symmetric: bool = True

    def __post_init__(self) -> None:
        """Check squareness, size and symmetry."""
        rows, cols = self.matrix.shape
        if rows != cols:
            raise DimensionMismatchError(f"matrix must be square, got {self.matrix.shape}")
        expected = self.dofs.n_dofs if self.dofs is not None else rows
        if rows != expected:
            raise DimensionMismatchError(f"matrix has dimension {rows}, dof map expects {expected}")
        if self.symmetric and rows:
            scale = abs(self.matrix).max()
            skew = abs(self.matrix - self.matrix.T).max()
            if skew > SYMMETRY_TOL * scale:
                raise FemError(f"matrix is not symmetric (skew {skew:.3e}, scale {scale:.3e})")

    @property
    def dimension(self) -> int:
        """Number of rows (and columns)."""
        return int(self.matrix.shape[0])

    def toarray(self) -> FloatArray:
        """Dense copy."""
        return self.matrix.toarray()

    def vector_of(self, f: FEFunction) -> FloatArray:
        """Coefficient vector of f in the space this matrix acts on."""
        if self.dofs is None:
            if f.values.shape[0] != self.dimension:
                raise DimensionMismatchError(f"function has {f.values.shape[0]} values, matrix {self.dimension}")
            return f.values
        return self.dofs.restrict(f.values)


@dataclass(frozen=True, eq=False)
class FEFunction:
    """A P1 field given by its values at all mesh nodes.

    With ``dirichlet`` set the boundary values are forced to zero.
    """

    mesh: TriMesh
    values: FloatArray
    dirichlet: bool = True

    def __post_init__(self) -> None:
        """Validate the value count and apply the Dirichlet condition."""
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (self.mesh.n_nodes,):
            raise DimensionMismatchError(f"expected {self.mesh.n_nodes} nodal values, got shape {values.shape}")
        if self.dirichlet:
            values[self.mesh.boundary_nodes] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interior(cls, mesh: TriMesh, dofs: DofMap, interior: FloatArray) -> FEFunction:
        """Build a Dirichlet function from interior coefficients."""
        if dofs.n_nodes != mesh.n_nodes:
            raise DimensionMismatchError("dof map does not belong to this mesh")
        return cls(mesh, dofs.extend(np.asarray(interior, dtype=np.float64)), dirichlet=True)

    @classmethod
    def interpolate(
        cls,
        mesh: TriMesh,
        fn: Callable[[FloatArray, FloatArray], npt.ArrayLike],
        *,
        dirichlet: bool = False,
    ) -> FEFunction:
        """Nodal interpolant of a vectorized function fn(x, y)."""
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        return cls(mesh, np.broadcast_to(np.asarray(fn(x, y), dtype=np.float64), x.shape), dirichlet=dirichlet)

    @classmethod
    def zeros(cls, mesh: TriMesh) -> FEFunction:
        """The zero function."""
        return cls(mesh, np.zeros(mesh.n_nodes))

    def with_values(self, values: FloatArray) -> FEFunction:
        """Same mesh and boundary treatment, new values."""
        return FEFunction(self.mesh, values, self.dirichlet)

    def on_mesh(self, mesh: TriMesh) -> FEFunction:
        """The same nodal values on another mesh with identical node numbering."""
        if mesh.n_nodes != self.mesh.n_nodes or not np.array_equal(mesh.elements, self.mesh.elements):
            raise MeshMismatchError("meshes do not share node numbering and connectivity")
        return FEFunction(mesh, self.values, self.dirichlet)


def _triplets(mesh: TriMesh, local: FloatArray) -> sparse.csr_matrix:
    m = mesh.n_elements
    rows = np.broadcast_to(mesh.elements[:, :, None], (m, 3, 3)).ravel()
    cols = np.broadcast_to(mesh.elements[:, None, :], (m, 3, 3)).ravel()
    n = mesh.n_nodes
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _checked_gradients(mesh: TriMesh) -> tuple[FloatArray, FloatArray]:
    grads, area = element_gradients(mesh.corners)
    if (area <= 0.0).any():
        raise DegenerateTriangleError(f"mesh has {(area <= 0.0).sum()} element(s) with non-positive area")
    return grads, area


def weighted_stiffness(mesh: TriMesh, weights: npt.ArrayLike | None = None) -> sparse.csr_matrix:
    """Node-level matrix of sum_j (W_j grad u, grad v)_{T_j}.

    Args:
        mesh: The mesh.
        weights: None for the plain Laplacian, shape (m,) for scalar weights or
            (m, 2, 2) for tensor weights.
    """
    grads, area = _checked_gradients(mesh)
    if weights is None:
        local = np.einsum("mai,mbi->mab", grads, grads)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape == (mesh.n_elements,):
            local = w[:, None, None] * np.einsum("mai,mbi->mab", grads, grads)
        elif w.shape == (mesh.n_elements, 2, 2):
            local = np.einsum("mai,mij,mbj->mab", grads, w, grads)
        else:
            raise DimensionMismatchError(f"weights must have shape (m,) or (m, 2, 2), got {w.shape}")
    return _triplets(mesh, area[:, None, None] * local)


def weighted_mass(mesh: TriMesh, weights: npt.ArrayLike | None = None) -> sparse.csr_matrix:
    """Node-level matrix of sum_j w_j (u, v)_{T_j} with the consistent mass."""
    _, area = _checked_gradients(mesh)
    scale = area
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (mesh.n_elements,):
            raise DimensionMismatchError(f"weights must have shape (m,), got {w.shape}")
        scale = area * w
    return _triplets(mesh, scale[:, None, None] * _MASS_PATTERN[None])


def assemble_full(mesh: TriMesh) -> tuple[SparseSym, SparseSym]:
    """Stiffness and mass over all nodes, before Dirichlet elimination."""
    return SparseSym(weighted_stiffness(mesh)), SparseSym(weighted_mass(mesh))


def restrict_to_interior(matrix: sparse.csr_matrix, dofs: DofMap) -> sparse.csr_matrix:
    """Drop the rows and columns of boundary nodes."""
    idx = dofs.node_of_interior
    return matrix[idx][:, idx].tocsr()


def assemble(mesh: TriMesh) -> tuple[SparseSym, SparseSym, DofMap]:
    """Stiffness A and mass B on the interior degrees of freedom.

    Raises:
        DegenerateTriangleError: If an element has non-positive area.
    """
    dofs = DofMap.from_mesh(mesh)
    a = SparseSym(restrict_to_interior(weighted_stiffness(mesh), dofs), dofs)
    b = SparseSym(restrict_to_interior(weighted_mass(mesh), dofs), dofs)
    logger.debug("assembled %d interior dofs (%d nodes, %d elements)", dofs.n_dofs, mesh.n_nodes, mesh.n_elements)
    return a, b, dofs


def evaluate_many(f: FEFunction, points: PointsLike, tol: float | None = None) -> FloatArray:
    """Barycentric interpolation of f at many points.

    Raises:
        OutsideDomainError: If a point cannot be located within tol.
    """
    pts = as_coordinates(points)
    elements, bary = f.mesh.locate_points(pts, tol)
    return np.einsum("pa,pa->p", bary, f.values[f.mesh.elements[elements]])


def evaluate(f: FEFunction, pt: Point2 | npt.ArrayLike, tol: float | None = None) -> float:
    """Value of f at pt."""
    coords = pt.as_array() if isinstance(pt, Point2) else np.asarray(pt, dtype=np.float64)
    return float(evaluate_many(f, coords.reshape(1, 2), tol)[0])


def inner(f: FEFunction, g: FEFunction, b: SparseSym) -> float:
    """The b-inner product of f and g.

    Raises:
        MeshMismatchError: If f and g live on different meshes.
        DimensionMismatchError: If b does not fit the functions.
    """
    if f.mesh is not g.mesh:
        raise MeshMismatchError("inner product of functions on different meshes")
    x = b.vector_of(f)
    y = b.vector_of(g)
    return float(x @ (b.matrix @ y))


def norm(f: FEFunction, b: SparseSym) -> float:
    """sqrt(inner(f, f, b))."""
    return math.sqrt(max(inner(f, f, b), 0.0))
