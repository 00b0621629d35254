"""Polygonal domains, vertex perturbations and the piecewise-affine macro correspondence.

A polygon with vertices (x_1, y_1), ..., (x_k, y_k) is identified with its
parameter vector p = (x_1, ..., x_k, y_1, ..., y_k). A perturbation moves it to
p_t = p + t*e. Over a fan triangulation of the polygon, each macro triangle of p
is carried onto its counterpart of p_t by one affine map; together these maps
form a continuous piecewise-affine map between the two domains.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import numpy.typing as npt

from eigstab.core.exceptions import (
    DegenerateTriangleError,
    GeometryError,
    InvalidPerturbationError,
    InvalidPolygonError,
    NonConvexError,
    SelfIntersectingError,
)

type FloatArray = npt.NDArray[np.float64]
type IntArray = npt.NDArray[np.int64]

SIMPLICITY_TOL = 1e-12
DEGENERACY_TOL = 1e-14


def _frozen(values: npt.ArrayLike, dtype: type = np.float64) -> npt.NDArray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, slots=True)
class Point2:
    """A point in the plane."""

    x: float
    y: float

    def __post_init__(self) -> None:
        """Reject non-finite coordinates."""
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> FloatArray:
        """Return the coordinates as a length-2 array."""
        return np.array([self.x, self.y], dtype=np.float64)


type PointsLike = Sequence[Point2] | npt.ArrayLike


def as_coordinates(points: PointsLike) -> FloatArray:
    """Convert a sequence of Point2 or an array-like of pairs to an (n, 2) float array."""
    if isinstance(points, Sequence) and points and isinstance(points[0], Point2):
        return np.array([[p.x, p.y] for p in points], dtype=np.float64)  # type: ignore[union-attr]
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[-1] != 2:  # noqa: PLR2004
        raise GeometryError(f"expected coordinate pairs, got shape {arr.shape}")
    return arr


def signed_area(vertices: FloatArray) -> float:
    """Shoelace area, positive for counter-clockwise vertex order."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o: FloatArray, a: FloatArray, b: FloatArray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def _point_segment_distance(p: FloatArray, a: FloatArray, b: FloatArray) -> float:
    ab = b - a
    denom = float(np.dot(ab, ab))
    s = 0.0 if denom == 0.0 else min(1.0, max(0.0, float(np.dot(p - a, ab)) / denom))
    return float(np.linalg.norm(p - (a + s * ab)))


def _segments_distance(a: FloatArray, b: FloatArray, c: FloatArray, d: FloatArray) -> float:
    d1, d2 = _cross(c, d, a), _cross(c, d, b)
    d3, d4 = _cross(a, b, c), _cross(a, b, d)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return 0.0
    return min(
        _point_segment_distance(a, c, d),
        _point_segment_distance(b, c, d),
        _point_segment_distance(c, a, b),
        _point_segment_distance(d, a, b),
    )


def _diameter(vertices: FloatArray) -> float:
    diffs = vertices[:, None, :] - vertices[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def _first_crossing(vertices: FloatArray, tol: float) -> tuple[int, int] | None:
    """Return the first pair of edges that cross, touch or fold back onto each other."""
    k = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % k]) for i in range(k)]
    for i in range(k):
        if np.linalg.norm(edges[i][1] - edges[i][0]) <= tol:
            return i, i
    for i, j in combinations(range(k), 2):
        (a, b), (c, d) = edges[i], edges[j]
        if j == i + 1 or (i == 0 and j == k - 1):
            # adjacent edges share one vertex; they only fail by folding back
            shared_first = j == i + 1
            far_i, far_j = (a, d) if shared_first else (b, c)
            if min(_point_segment_distance(far_j, a, b), _point_segment_distance(far_i, c, d)) <= tol:
                return i, j
            continue
        if _segments_distance(a, b, c, d) <= tol:
            return i, j
    return None


@dataclass(frozen=True, eq=False)
class PolygonSpec:
    """A simple, counter-clockwise polygon given by its vertex coordinates, shape (k, 2)."""

    vertices: FloatArray

    def __post_init__(self) -> None:
        """Validate vertex count, finiteness, simplicity and orientation."""
        verts = np.array(self.vertices, dtype=np.float64, copy=True)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:  # noqa: PLR2004
            raise InvalidPolygonError(f"a polygon needs k >= 3 vertex pairs, got shape {verts.shape}")
        if not np.isfinite(verts).all():
            raise InvalidPolygonError("polygon vertices must be finite")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

        tol = SIMPLICITY_TOL * self.diameter
        crossing = _first_crossing(verts, tol)
        if crossing is not None:
            raise SelfIntersectingError(f"polygon edges {crossing[0]} and {crossing[1]} intersect")
        if signed_area(verts) <= 0.0:
            raise InvalidPolygonError("polygon vertices must be in counter-clockwise order")

    @classmethod
    def from_points(cls, points: PointsLike) -> PolygonSpec:
        """Build a polygon from Point2 objects or coordinate pairs."""
        return cls(as_coordinates(points))

    @classmethod
    def from_parameters(cls, p: npt.ArrayLike) -> PolygonSpec:
        """Build a polygon from its parameter vector (x_1..x_k, y_1..y_k)."""
        params = np.asarray(p, dtype=np.float64)
        if params.ndim != 1 or params.size % 2:
            raise InvalidPolygonError(f"parameter vector must have even length, got {params.shape}")
        k = params.size // 2
        return cls(np.column_stack([params[:k], params[k:]]))

    @property
    def k(self) -> int:
        """Number of vertices."""
        return int(self.vertices.shape[0])

    @property
    def parameters(self) -> FloatArray:
        """The parameter vector (x_1..x_k, y_1..y_k)."""
        return np.concatenate([self.vertices[:, 0], self.vertices[:, 1]])

    @property
    def area(self) -> float:
        """Enclosed area."""
        return signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        """Largest vertex-to-vertex distance."""
        return _diameter(self.vertices)

    @property
    def points(self) -> tuple[Point2, ...]:
        """Vertices as Point2 objects."""
        return tuple(Point2(float(x), float(y)) for x, y in self.vertices)

    def vertex_average(self) -> FloatArray:
        """Arithmetic mean of the vertices (an interior point of a convex polygon)."""
        return self.vertices.mean(axis=0)


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """A direction e in parameter space (length 2k) and a magnitude t >= 0."""

    direction: FloatArray
    magnitude: float

    def __post_init__(self) -> None:
        """Validate the direction vector and magnitude."""
        direction = _frozen(self.direction)
        if direction.ndim != 1 or direction.size < 6 or direction.size % 2:  # noqa: PLR2004
            raise InvalidPerturbationError(f"direction must be a vector of 2k >= 6 entries, got {direction.shape}")
        if not np.isfinite(direction).all() or not math.isfinite(self.magnitude):
            raise InvalidPerturbationError("direction and magnitude must be finite")
        if self.magnitude < 0.0:
            raise InvalidPerturbationError(f"magnitude must be >= 0, got {self.magnitude}")
        if self.magnitude > 0.0 and not direction.any():
            raise InvalidPerturbationError("a positive magnitude needs a nonzero direction")
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "magnitude", float(self.magnitude))

    @classmethod
    def vertex_shift(cls, k: int, vertex: int, dx: float, dy: float, magnitude: float) -> PerturbationSpec:
        """Move a single vertex of a k-gon along (dx, dy)."""
        if not 0 <= vertex < k:
            raise InvalidPerturbationError(f"vertex {vertex} out of range for a {k}-gon")
        direction = np.zeros(2 * k)
        direction[vertex] = dx
        direction[k + vertex] = dy
        return cls(direction, magnitude)

    @classmethod
    def dilation(cls, polygon: PolygonSpec, magnitude: float) -> PerturbationSpec:
        """Uniform scaling about the origin: p_t = (1 + t) p."""
        return cls(polygon.parameters, magnitude)

    def with_magnitude(self, magnitude: float) -> PerturbationSpec:
        """Same direction, different magnitude."""
        return PerturbationSpec(self.direction, magnitude)


def perturb_polygon(p: PolygonSpec, spec: PerturbationSpec) -> PolygonSpec:
    """Return the polygon with parameter vector p + t*e.

    Raises:
        InvalidPerturbationError: If the direction length is not 2k.
        SelfIntersectingError: If the perturbed polygon is not simple.
    """
    if spec.direction.size != 2 * p.k:
        raise InvalidPerturbationError(f"direction has {spec.direction.size} entries, polygon needs {2 * p.k}")
    if spec.magnitude == 0.0:
        return p
    return PolygonSpec.from_parameters(p.parameters + spec.magnitude * spec.direction)


@dataclass(frozen=True, eq=False)
class AffineMap2:
    """The map x -> linear @ x + offset with cached inverse and |det|."""

    linear: FloatArray
    offset: FloatArray
    inverse: FloatArray = field(init=False)
    det: float = field(init=False)

    def __post_init__(self) -> None:
        """Freeze arrays and cache the inverse."""
        linear = _frozen(self.linear)
        offset = _frozen(self.offset)
        if linear.shape != (2, 2) or offset.shape != (2,):
            raise GeometryError(f"affine map needs a 2x2 linear part and a 2-vector offset, got {linear.shape}")
        det = float(np.linalg.det(linear))
        if det == 0.0 or not math.isfinite(det):
            raise DegenerateTriangleError("affine map has a singular linear part")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "inverse", _frozen(np.linalg.inv(linear)))
        object.__setattr__(self, "det", det)

    @classmethod
    def identity(cls) -> AffineMap2:
        """The identity map."""
        return cls(np.eye(2), np.zeros(2))

    @property
    def abs_det(self) -> float:
        """|det(linear)|, the area scaling factor."""
        return abs(self.det)

    def apply(self, points: PointsLike) -> FloatArray:
        """Map points of shape (..., 2)."""
        pts = as_coordinates(points) if not isinstance(points, np.ndarray) else points
        return pts @ self.linear.T + self.offset

    def apply_inverse(self, points: PointsLike) -> FloatArray:
        """Map points back through the cached inverse."""
        pts = as_coordinates(points) if not isinstance(points, np.ndarray) else points
        return (pts - self.offset) @ self.inverse.T


def _triangle(points: PointsLike) -> FloatArray:
    tri = as_coordinates(points)
    if tri.shape != (3, 2):
        raise GeometryError(f"a triangle needs exactly three points, got shape {tri.shape}")
    return tri


def triangle_signed_area(tri: FloatArray) -> float:
    """Signed area of a (3, 2) triangle, positive when counter-clockwise."""
    return 0.5 * _cross(tri[0], tri[1], tri[2])


def affine_from_triangles(src: PointsLike, dst: PointsLike) -> AffineMap2:
    """Return the affine map sending the three src vertices to the three dst vertices.

    Raises:
        DegenerateTriangleError: If src has area <= 1e-14 * diameter**2.
    """
    s = _triangle(src)
    d = _triangle(dst)
    diam = _diameter(s)
    if abs(triangle_signed_area(s)) <= DEGENERACY_TOL * diam**2:
        raise DegenerateTriangleError(f"source triangle {s.tolist()} is degenerate")
    edges_src = np.column_stack([s[1] - s[0], s[2] - s[0]])
    edges_dst = np.column_stack([d[1] - d[0], d[2] - d[0]])
    linear = np.linalg.solve(edges_src.T, edges_dst.T).T
    offset = d[0] - linear @ s[0]
    return AffineMap2(linear, offset)


@dataclass(frozen=True, eq=False)
class MacroTriangulation:
    """Fan triangulation of a convex polygon.

    ``triangles`` index polygon vertices; when ``centered`` is set, index k stands for
    the vertex average, which moves along with the vertices under a perturbation.
    """

    polygon: PolygonSpec
    triangles: IntArray
    centered: bool = False

    def __post_init__(self) -> None:
        """Freeze the index array."""
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64))

    def __len__(self) -> int:
        """Number of macro triangles."""
        return int(self.triangles.shape[0])

    def corner_points(self, polygon: PolygonSpec | None = None) -> FloatArray:
        """Macro triangle corners, shape (m, 3, 2), for this or a perturbed polygon."""
        poly = self.polygon if polygon is None else polygon
        if poly.k != self.polygon.k:
            raise GeometryError(f"polygon has {poly.k} vertices, triangulation expects {self.polygon.k}")
        pts = poly.vertices
        if self.centered:
            pts = np.vstack([pts, poly.vertex_average()])
        return pts[self.triangles]


def fan_macro_triangulation(p: PolygonSpec, *, centered: bool = False) -> MacroTriangulation:
    """Fan-triangulate a convex polygon from vertex 0 (or from the vertex average).

    Raises:
        NonConvexError: If the fan triangles do not tile the polygon.
    """
    k = p.k
    verts = p.vertices
    tol = SIMPLICITY_TOL * p.diameter**2
    turns = [_cross(verts[i - 1], verts[i], verts[(i + 1) % k]) for i in range(k)]
    if min(turns) < -tol:
        raise NonConvexError(f"polygon turns clockwise at vertex {int(np.argmin(turns))}")

    if centered:
        triangles = np.array([[k, i, (i + 1) % k] for i in range(k)], dtype=np.int64)
    else:
        triangles = np.array([[0, i, i + 1] for i in range(1, k - 1)], dtype=np.int64)
    macro = MacroTriangulation(polygon=p, triangles=triangles, centered=centered)

    areas = [triangle_signed_area(tri) for tri in macro.corner_points()]
    for i, a in enumerate(areas):
        if a <= tol:
            raise NonConvexError(f"fan triangle {i} is degenerate or inverted")
    if not math.isclose(sum(areas), p.area, rel_tol=1e-12):
        raise NonConvexError("fan triangles do not tile the polygon")
    return macro


def macro_maps(macro: MacroTriangulation, p_t: PolygonSpec) -> tuple[AffineMap2, ...]:
    """One affine map per macro triangle, carrying it onto its counterpart in p_t.

    Raises:
        DegenerateTriangleError: If a perturbed macro triangle collapses or flips.
    """
    src = macro.corner_points()
    dst = macro.corner_points(p_t)
    tol = DEGENERACY_TOL * p_t.diameter**2
    maps = []
    for i, (s, d) in enumerate(zip(src, dst, strict=True)):
        if triangle_signed_area(d) <= tol:
            raise DegenerateTriangleError(f"perturbed macro triangle {i} collapses")
        maps.append(affine_from_triangles(s, d))
    return tuple(maps)


def barycentric_coordinates(corners: FloatArray, points: FloatArray) -> FloatArray:
    """Barycentric coordinates of points in triangles.

    ``corners`` has shape (..., 3, 2) and ``points`` shape (..., 2); leading axes broadcast,
    the result has the broadcast leading shape followed by 3.
    """
    a = corners[..., 0, :]
    e1 = corners[..., 1, :] - a
    e2 = corners[..., 2, :] - a
    det = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
    rel = points - a
    l1 = (rel[..., 0] * e2[..., 1] - rel[..., 1] * e2[..., 0]) / det
    l2 = (e1[..., 0] * rel[..., 1] - e1[..., 1] * rel[..., 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)
