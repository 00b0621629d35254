"""Structured triangulations, affine transport onto perturbed domains and point location."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
import numpy.typing as npt
from scipy.spatial import cKDTree

from eigstab.core.exceptions import (
    DegenerateTriangleError,
    InvertedElementError,
    MeshError,
    NodeOutsideMacroError,
    NonConformingElementError,
    OutsideDomainError,
)
from eigstab.core.geometry import (
    DEGENERACY_TOL,
    AffineMap2,
    FloatArray,
    IntArray,
    MacroTriangulation,
    PerturbationSpec,
    Point2,
    PolygonSpec,
    barycentric_coordinates,
    fan_macro_triangulation,
    macro_maps,
    perturb_polygon,
)

logger = logging.getLogger(__name__)

MACRO_TOL = 1e-12
CONFORMITY_TOL = 1e-12
LOCATE_TOL = 1e-10
_LOCATE_CANDIDATES = 12


class MeshPattern(StrEnum):
    """Diagonal layout of the structured rectangle meshes."""

    LEFT = "left"
    RIGHT = "right"
    CROSSED = "crossed"


def _frozen(values: npt.ArrayLike, dtype: type) -> npt.NDArray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def boundary_nodes_of(elements: IntArray) -> IntArray:
    """Sorted indices of nodes lying on an edge that belongs to exactly one element."""
    edges = np.concatenate([elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]])
    edges.sort(axis=1)
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    return np.unique(unique[counts == 1])


@dataclass(frozen=True, eq=False)
class TriMesh:
    """A conforming triangulation with counter-clockwise elements.

    Attributes:
        nodes: Node coordinates, shape (n, 2).
        elements: Node indices per element, shape (m, 3).
        boundary_nodes: Sorted indices of the nodes on the domain boundary.
        macro_id: Index of the macro triangle each element was generated from.
        macro_corners: Corners of the macro triangles, shape (M, 3, 2).
    """

    nodes: FloatArray
    elements: IntArray
    boundary_nodes: IntArray
    macro_id: IntArray
    macro_corners: FloatArray

    def __post_init__(self) -> None:
        """Freeze arrays and check element orientation."""
        object.__setattr__(self, "nodes", _frozen(self.nodes, np.float64))
        object.__setattr__(self, "elements", _frozen(self.elements, np.int64))
        object.__setattr__(self, "boundary_nodes", _frozen(np.unique(self.boundary_nodes), np.int64))
        object.__setattr__(self, "macro_id", _frozen(self.macro_id, np.int64))
        object.__setattr__(self, "macro_corners", _frozen(self.macro_corners, np.float64))

        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:  # noqa: PLR2004
            raise MeshError(f"nodes must have shape (n, 2), got {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != 3:  # noqa: PLR2004
            raise MeshError(f"elements must have shape (m, 3), got {self.elements.shape}")
        if self.macro_id.shape != (self.n_elements,):
            raise MeshError("macro_id needs one entry per element")
        if self.elements.min() < 0 or self.elements.max() >= self.n_nodes:
            raise MeshError("element references a node that does not exist")

        areas = self.element_areas
        bad = np.flatnonzero(areas <= DEGENERACY_TOL * self.diameter**2)
        if bad.size:
            raise InvertedElementError(f"{bad.size} element(s) with non-positive area, first is {int(bad[0])}")

    @classmethod
    def build(cls, nodes: FloatArray, elements: IntArray, macro_id: IntArray, macro_corners: FloatArray) -> TriMesh:
        """Create a mesh and derive its boundary nodes from the connectivity."""
        elements = np.asarray(elements, dtype=np.int64)
        return cls(nodes, elements, boundary_nodes_of(elements), macro_id, macro_corners)

    @property
    def n_nodes(self) -> int:
        """Number of nodes."""
        return int(self.nodes.shape[0])

    @property
    def n_elements(self) -> int:
        """Number of elements."""
        return int(self.elements.shape[0])

    @cached_property
    def corners(self) -> FloatArray:
        """Element corner coordinates, shape (m, 3, 2)."""
        return self.nodes[self.elements]

    @cached_property
    def element_areas(self) -> FloatArray:
        """Signed element areas (positive for counter-clockwise elements)."""
        c = self.corners
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        """Total meshed area."""
        return float(self.element_areas.sum())

    @cached_property
    def diameter(self) -> float:
        """Diagonal of the bounding box, an upper bound of the domain diameter."""
        return float(np.linalg.norm(self.nodes.max(axis=0) - self.nodes.min(axis=0)))

    @cached_property
    def interior_nodes(self) -> IntArray:
        """Sorted indices of the nodes not on the boundary."""
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.corners.mean(axis=1))

    @cached_property
    def _heights(self) -> FloatArray:
        # distance from each corner to the opposite edge
        c = self.corners
        opposite = np.stack(
            [
                np.linalg.norm(c[:, 2] - c[:, 1], axis=1),
                np.linalg.norm(c[:, 0] - c[:, 2], axis=1),
                np.linalg.norm(c[:, 1] - c[:, 0], axis=1),
            ],
            axis=1,
        )
        return 2.0 * self.element_areas[:, None] / opposite

    def _outside_distance(self, elements: IntArray, points: FloatArray) -> tuple[FloatArray, FloatArray]:
        bary = barycentric_coordinates(self.corners[elements], points)
        dist = (-bary * self._heights[elements]).max(axis=-1)
        return bary, dist

    def locate_points(self, points: npt.ArrayLike, tol: float | None = None) -> tuple[IntArray, FloatArray]:
        """Find an element containing each point and its barycentric coordinates.

        A point is accepted when it lies within distance ``tol`` of an element; the
        barycentric coordinates are then clamped to [0, 1] and renormalized.

        Args:
            points: Query points, shape (p, 2).
            tol: Distance tolerance, defaults to 1e-10 times the mesh diameter.

        Returns:
            Element indices (p,) and barycentric coordinates (p, 3).

        Raises:
            OutsideDomainError: If a point is farther than tol from every element.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        tol = LOCATE_TOL * self.diameter if tol is None else tol
        k = min(_LOCATE_CANDIDATES, self.n_elements)
        _, candidates = self._centroid_tree.query(pts, k=k)
        candidates = np.asarray(candidates, dtype=np.int64).reshape(len(pts), k)

        bary, dist = self._outside_distance(candidates, pts[:, None, :])
        best = dist.argmin(axis=1)
        rows = np.arange(len(pts))
        found_elem = candidates[rows, best]
        found_bary = bary[rows, best]
        found_dist = dist[rows, best]

        all_elements = np.arange(self.n_elements)
        for i in np.flatnonzero(found_dist > tol):
            # nearest centroids can miss thin neighbours; fall back to a full scan
            b_all, d_all = self._outside_distance(all_elements, pts[i])
            j = int(d_all.argmin())
            if d_all[j] > tol:
                raise OutsideDomainError(
                    f"point ({pts[i, 0]:.17g}, {pts[i, 1]:.17g}) is {d_all[j]:.3e} outside the mesh (tol {tol:.3e})"
                )
            found_elem[i] = j
            found_bary[i] = b_all[j]

        clamped = np.clip(found_bary, 0.0, 1.0)
        clamped /= clamped.sum(axis=1, keepdims=True)
        return found_elem, clamped

    def locate_point(self, pt: Point2 | npt.ArrayLike, tol: float | None = None) -> tuple[int, FloatArray]:
        """Single-point variant of locate_points."""
        coords = pt.as_array() if isinstance(pt, Point2) else np.asarray(pt, dtype=np.float64)
        elements, bary = self.locate_points(coords.reshape(1, 2), tol)
        return int(elements[0]), bary[0]


def locate_point(mesh: TriMesh, pt: Point2 | npt.ArrayLike, tol: float | None = None) -> tuple[int, FloatArray]:
    """Return the element containing pt and the clamped barycentric coordinates of pt."""
    return mesh.locate_point(pt, tol)


@dataclass(frozen=True, eq=False)
class MatchedMeshPair:
    """Meshes of K^0 and K^t sharing connectivity, related element-wise by affine maps."""

    mesh0: TriMesh
    mesh_t: TriMesh
    element_maps: tuple[AffineMap2, ...]
    t: float

    def __post_init__(self) -> None:
        """Check that both meshes share node and element structure."""
        if self.mesh0.n_nodes != self.mesh_t.n_nodes or not np.array_equal(
            self.mesh0.elements, self.mesh_t.elements
        ):
            raise MeshError("matched meshes must share nodes and connectivity")
        if len(self.element_maps) != self.mesh0.n_elements:
            raise MeshError("one affine map per element is required")

    @cached_property
    def linear_parts(self) -> FloatArray:
        """Linear parts S_j of the element maps, shape (m, 2, 2)."""
        return np.stack([m.linear for m in self.element_maps])


def _macro_corners(polygon: PolygonSpec) -> FloatArray:
    return fan_macro_triangulation(polygon).corner_points()


def rect_mesh(n: int, width: float = 1.0, height: float = 1.0, pattern: MeshPattern = MeshPattern.LEFT) -> TriMesh:
    """Structured mesh of (0, width) x (0, height) with n cells along each side.

    Lattice node (i, j) has index j*(n+1) + i; Crossed cell centers follow the lattice.
    Elements belong to the macro triangle that holds their centroid. Right and Crossed
    elements never cross the macro diagonal from (0, 0) to (width, height). Left
    elements along it do, so a Left mesh only transports under perturbations that map
    both macro triangles by the same affine map, such as the right-edge stretch or a
    uniform dilation; anything else raises NonConformingElementError in transport.
    """
    if n < 1:
        raise MeshError(f"n must be >= 1, got {n}")
    if width <= 0.0 or height <= 0.0:
        raise MeshError(f"rectangle sides must be positive, got {width} x {height}")
    pattern = MeshPattern(pattern)

    xs = np.linspace(0.0, width, n + 1)
    ys = np.linspace(0.0, height, n + 1)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    v00 = jj * (n + 1) + ii
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1

    match pattern:
        case MeshPattern.RIGHT:
            per_cell = [(v00, v10, v11), (v00, v11, v01)]
        case MeshPattern.LEFT:
            per_cell = [(v00, v10, v01), (v10, v11, v01)]
        case MeshPattern.CROSSED:
            centers = np.column_stack([(ii + 0.5) * width / n, (jj + 0.5) * height / n])
            c = (n + 1) ** 2 + np.arange(n * n)
            nodes = np.vstack([nodes, centers])
            per_cell = [(v00, v10, c), (v10, v11, c), (v11, v01, c), (v01, v00, c)]

    # cell-major order: all triangles of a cell are consecutive
    elements = np.stack([np.column_stack(tri) for tri in per_cell], axis=1).reshape(-1, 3)

    centroids = nodes[elements].mean(axis=1)
    macro_id = np.where(centroids[:, 1] / height < centroids[:, 0] / width, 0, 1)
    rect = PolygonSpec.from_points([(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)])
    mesh = TriMesh.build(nodes, elements, macro_id, _macro_corners(rect))
    logger.debug("rect mesh n=%d pattern=%s: %d nodes, %d elements", n, pattern, mesh.n_nodes, mesh.n_elements)
    return mesh


def polygon_mesh(macro: MacroTriangulation, levels: int) -> TriMesh:
    """Uniformly refine every macro triangle ``levels`` times (4**levels elements each).

    Nodes on shared macro edges are generated once, so the result is conforming.
    """
    if levels < 0:
        raise MeshError(f"levels must be >= 0, got {levels}")
    n = 2**levels
    corners = macro.corner_points()
    node_index: dict[tuple[tuple[int, int], ...], int] = {}
    nodes: list[FloatArray] = []
    elements: list[tuple[int, int, int]] = []
    macro_id: list[int] = []

    for m, (tri_idx, tri) in enumerate(zip(macro.triangles, corners, strict=True)):
        local: dict[tuple[int, int], int] = {}
        for j in range(n + 1):
            for i in range(n + 1 - j):
                weights: dict[int, int] = {}
                for vertex, w in zip(tri_idx.tolist(), (n - i - j, i, j), strict=True):
                    if w:
                        weights[vertex] = weights.get(vertex, 0) + w
                key = tuple(sorted(weights.items()))
                if key not in node_index:
                    node_index[key] = len(nodes)
                    nodes.append(tri[0] + (i / n) * (tri[1] - tri[0]) + (j / n) * (tri[2] - tri[0]))
                local[i, j] = node_index[key]
        for j in range(n):
            for i in range(n - j):
                elements.append((local[i, j], local[i + 1, j], local[i, j + 1]))
                macro_id.append(m)
                if i + j <= n - 2:
                    elements.append((local[i + 1, j], local[i + 1, j + 1], local[i, j + 1]))
                    macro_id.append(m)

    mesh = TriMesh.build(np.array(nodes), np.array(elements), np.array(macro_id), corners)
    logger.debug("polygon mesh levels=%d: %d nodes, %d elements", levels, mesh.n_nodes, mesh.n_elements)
    return mesh


def triangle_mesh(apex: Point2 | Sequence[float], levels: int) -> TriMesh:
    """Uniform refinement of the triangle (0,0), (1,0), apex.

    Raises:
        DegenerateTriangleError: If the apex is on or below the base line.
    """
    ax, ay = (apex.x, apex.y) if isinstance(apex, Point2) else (float(apex[0]), float(apex[1]))
    diam = max(1.0, float(np.hypot(ax, ay)), float(np.hypot(ax - 1.0, ay)))
    if 0.5 * ay <= DEGENERACY_TOL * diam**2:
        raise DegenerateTriangleError(f"apex ({ax}, {ay}) does not span a counter-clockwise triangle over (0,1)")
    if levels < 1:
        raise MeshError(f"levels must be >= 1, got {levels}")
    polygon = PolygonSpec.from_points([(0.0, 0.0), (1.0, 0.0), (ax, ay)])
    return polygon_mesh(fan_macro_triangulation(polygon), levels)


def transport(mesh0: TriMesh, maps: Sequence[AffineMap2], t: float) -> MatchedMeshPair:
    """Carry mesh0 onto the perturbed domain with the macro maps, keeping connectivity.

    Each node is moved by the map of the first macro triangle containing it; each
    element's map is the map of its macro triangle.

    Raises:
        NodeOutsideMacroError: If a node lies in no macro triangle.
        NonConformingElementError: If an element straddles macro triangles whose maps disagree.
        InvertedElementError: If a transported element has non-positive area.
    """
    maps = tuple(maps)
    if len(maps) != len(mesh0.macro_corners):
        raise MeshError(f"{len(maps)} maps given for {len(mesh0.macro_corners)} macro triangles")

    bary = barycentric_coordinates(mesh0.macro_corners[None, :, :, :], mesh0.nodes[:, None, :])
    inside = bary.min(axis=-1) >= -MACRO_TOL
    outside = np.flatnonzero(~inside.any(axis=1))
    if outside.size:
        raise NodeOutsideMacroError(f"{outside.size} node(s) outside every macro triangle, first is {int(outside[0])}")
    owner = inside.argmax(axis=1)

    linear = np.stack([m.linear for m in maps])
    offset = np.stack([m.offset for m in maps])
    nodes_t = np.einsum("nij,nj->ni", linear[owner], mesh0.nodes) + offset[owner]

    corners0 = mesh0.corners
    elem_lin = linear[mesh0.macro_id]
    mapped = np.einsum("mij,mkj->mki", elem_lin, corners0) + offset[mesh0.macro_id][:, None, :]
    mismatch = np.abs(mapped - nodes_t[mesh0.elements]).max(axis=(1, 2))
    bad = np.flatnonzero(mismatch > CONFORMITY_TOL * mesh0.diameter)
    if bad.size:
        raise NonConformingElementError(
            f"{bad.size} element(s) straddle macro triangles with different maps, first is {int(bad[0])}"
        )

    corners_t = np.stack([m.apply(c) for m, c in zip(maps, mesh0.macro_corners, strict=True)])
    mesh_t = TriMesh(nodes_t, mesh0.elements, mesh0.boundary_nodes, mesh0.macro_id, corners_t)
    return MatchedMeshPair(mesh0, mesh_t, tuple(maps[i] for i in mesh0.macro_id), float(t))


def perturbed_pair(mesh0: TriMesh, macro: MacroTriangulation, perturbation: PerturbationSpec) -> MatchedMeshPair:
    """Perturb the polygon under macro, build the macro maps and transport mesh0 along them."""
    if len(macro) != len(mesh0.macro_corners) or not np.allclose(macro.corner_points(), mesh0.macro_corners):
        raise MeshError("mesh was not generated from the fan triangulation of this polygon")
    p_t = perturb_polygon(macro.polygon, perturbation)
    return transport(mesh0, macro_maps(macro, p_t), perturbation.magnitude)
