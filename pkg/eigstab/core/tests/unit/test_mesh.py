"""Unit tests for structured meshes, transport and point location."""

import math

import numpy as np
import pytest

from eigstab.core.exceptions import (
    DegenerateTriangleError,
    InvertedElementError,
    MeshError,
    NonConformingElementError,
    OutsideDomainError,
)
from eigstab.core.geometry import (
    MacroTriangulation,
    PerturbationSpec,
    PolygonSpec,
    fan_macro_triangulation,
    perturb_polygon,
)
from eigstab.core.mesh import (
    MeshPattern,
    TriMesh,
    boundary_nodes_of,
    locate_point,
    perturbed_pair,
    polygon_mesh,
    rect_mesh,
    triangle_mesh,
)

_PROPERTY_SEEDS = range(100)
_EQUILATERAL = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0)]


def _node_set(nodes: np.ndarray) -> list[tuple[float, float]]:
    return sorted(map(tuple, np.round(nodes, 12).tolist()))


@pytest.mark.parametrize(
    ("pattern", "nodes", "elements"),
    [(MeshPattern.LEFT, 25, 32), (MeshPattern.RIGHT, 25, 32), (MeshPattern.CROSSED, 41, 64)],
)
def test_rect_mesh_counts(pattern: MeshPattern, nodes: int, elements: int) -> None:
    """Left and Right split each cell in two, Crossed in four around the center."""
    mesh = rect_mesh(4, pattern=pattern)
    assert mesh.n_nodes == nodes
    assert mesh.n_elements == elements
    assert mesh.boundary_nodes.size == 16
    assert math.isclose(mesh.area, 1.0)
    assert (mesh.element_areas > 0.0).all()


def test_rect_mesh_lattice_numbering() -> None:
    """Lattice node (i, j) has index j*(n+1) + i and Left cells start with (v00, v10, v01)."""
    mesh = rect_mesh(2, 2.0, 1.0, MeshPattern.LEFT)
    np.testing.assert_allclose(mesh.nodes[5], [2.0, 0.5])
    assert mesh.elements[0].tolist() == [0, 1, 3]
    assert math.isclose(mesh.area, 2.0)


def test_rect_mesh_rejects_bad_input() -> None:
    """n and side lengths must be positive."""
    with pytest.raises(MeshError, match="n must be"):
        rect_mesh(0)
    with pytest.raises(MeshError, match="sides must be positive"):
        rect_mesh(4, width=-1.0)


@pytest.mark.parametrize("pattern", list(MeshPattern))
def test_rect_mesh_swap_symmetry(pattern: MeshPattern) -> None:
    """Swapping x and y maps the node set of the unit square mesh onto itself."""
    mesh = rect_mesh(6, pattern=pattern)
    assert _node_set(mesh.nodes[:, ::-1]) == _node_set(mesh.nodes)


def test_crossed_mesh_reflection_symmetry() -> None:
    """The Crossed mesh is symmetric about x = 1/2, element by element."""
    mesh = rect_mesh(4, pattern=MeshPattern.CROSSED)
    mirrored = mesh.corners.copy()
    mirrored[..., 0] = 1.0 - mirrored[..., 0]
    original = sorted(tuple(sorted(map(tuple, np.round(c, 12).tolist()))) for c in mesh.corners)
    reflected = sorted(tuple(sorted(map(tuple, np.round(c, 12).tolist()))) for c in mirrored)
    assert original == reflected


@pytest.mark.parametrize("levels", [1, 2, 4])
def test_triangle_refinement_counts(levels: int) -> None:
    """Each refinement level quadruples the elements of the macro triangle."""
    mesh = triangle_mesh(_EQUILATERAL[2], levels)
    n = 2**levels
    assert mesh.n_elements == 4**levels
    assert mesh.n_nodes == (n + 1) * (n + 2) // 2
    assert mesh.boundary_nodes.size == 3 * n
    assert math.isclose(mesh.area, math.sqrt(3.0) / 4.0)


def test_equilateral_mesh_reflection_symmetry() -> None:
    """Reflecting about x = 1/2 permutes the nodes of the refined equilateral triangle."""
    mesh = triangle_mesh(_EQUILATERAL[2], 3)
    mirrored = mesh.nodes.copy()
    mirrored[:, 0] = 1.0 - mirrored[:, 0]
    assert _node_set(mirrored) == _node_set(mesh.nodes)


def test_polygon_mesh_is_conforming(square_macro: MacroTriangulation) -> None:
    """Nodes on the shared macro edge are created once."""
    mesh = polygon_mesh(square_macro, 2)
    assert mesh.n_elements == 32
    assert mesh.n_nodes == 25
    assert mesh.boundary_nodes.size == 16
    assert set(mesh.macro_id.tolist()) == {0, 1}


def test_polygon_mesh_centered_fan(unit_square: PolygonSpec) -> None:
    """The centered fan adds the vertex average as an interior node."""
    mesh = polygon_mesh(fan_macro_triangulation(unit_square, centered=True), 1)
    assert mesh.n_elements == 16
    assert any(np.allclose(node, [0.5, 0.5]) for node in mesh.nodes[mesh.interior_nodes])


def test_triangle_mesh_rejects_flat_apex() -> None:
    """The apex must lie above the base line."""
    with pytest.raises(DegenerateTriangleError):
        triangle_mesh((0.5, 0.0), 2)
    with pytest.raises(MeshError, match="levels"):
        triangle_mesh((0.5, 1.0), 0)


def test_boundary_nodes_of_single_triangle() -> None:
    """Every node of a lone triangle is on the boundary."""
    assert boundary_nodes_of(np.array([[0, 1, 2]])).tolist() == [0, 1, 2]


def test_trimesh_rejects_inverted_element() -> None:
    """Clockwise elements are rejected."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvertedElementError):
        TriMesh.build(nodes, np.array([[0, 2, 1]]), np.zeros(1), np.zeros((1, 3, 2)))


def test_trimesh_rejects_unknown_node() -> None:
    """Elements may only reference existing nodes."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError, match="does not exist"):
        TriMesh.build(nodes, np.array([[0, 1, 3]]), np.zeros(1), np.zeros((1, 3, 2)))


def test_locate_point(crossed_8: TriMesh) -> None:
    """The located element and barycentric coordinates reproduce the point."""
    element, bary = locate_point(crossed_8, (0.3, 0.7))
    assert math.isclose(bary.sum(), 1.0)
    np.testing.assert_allclose(bary @ crossed_8.corners[element], [0.3, 0.7], atol=1e-14)


def test_locate_points_on_boundary(crossed_8: TriMesh) -> None:
    """Points a hair outside the boundary are clamped onto it."""
    elements, bary = crossed_8.locate_points(np.array([[1.0 + 1e-13, 0.5], [0.0, 0.0]]))
    assert elements.shape == (2,)
    assert (bary >= 0.0).all()


def test_locate_point_outside(crossed_8: TriMesh) -> None:
    """Points far outside the mesh are reported."""
    with pytest.raises(OutsideDomainError, match="outside the mesh"):
        locate_point(crossed_8, (2.0, 2.0))


def test_perturbed_pair_identity(square_macro: MacroTriangulation, stretch_direction: list[float]) -> None:
    """t = 0 transports every node onto itself."""
    mesh0 = rect_mesh(4, pattern=MeshPattern.CROSSED)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec(np.array(stretch_direction), 0.0))
    np.testing.assert_array_equal(pair.mesh_t.nodes, mesh0.nodes)
    assert pair.t == 0.0


@pytest.mark.parametrize("pattern", list(MeshPattern))
def test_perturbed_pair_stretch(
    pattern: MeshPattern, square_macro: MacroTriangulation, stretch_direction: list[float]
) -> None:
    """The stretch scales x by 1 + t on every pattern and keeps connectivity."""
    mesh0 = rect_mesh(4, pattern=pattern)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec(np.array(stretch_direction), 0.1))
    np.testing.assert_allclose(pair.mesh_t.nodes[:, 0], 1.1 * mesh0.nodes[:, 0], atol=1e-14)
    np.testing.assert_allclose(pair.mesh_t.nodes[:, 1], mesh0.nodes[:, 1], atol=1e-15)
    np.testing.assert_array_equal(pair.mesh_t.elements, mesh0.elements)
    np.testing.assert_array_equal(pair.mesh_t.boundary_nodes, mesh0.boundary_nodes)
    assert math.isclose(pair.mesh_t.area, 1.1)
    assert pair.linear_parts.shape == (mesh0.n_elements, 2, 2)


def test_perturbed_pair_vertex_shift_on_aligned_mesh(square_macro: MacroTriangulation) -> None:
    """Meshes aligned with the macro diagonal follow a corner shift piecewise affinely."""
    mesh0 = rect_mesh(4, pattern=MeshPattern.RIGHT)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec.vertex_shift(4, 2, 1.0, 0.0, 0.1))
    assert math.isclose(pair.mesh_t.area, 1.05)
    assert {round(m.det, 12) for m in pair.element_maps} == {1.0, 1.1}


def test_perturbed_pair_straddling_elements(square_macro: MacroTriangulation) -> None:
    """Left elements cross the macro diagonal, so a corner shift is not conforming."""
    mesh0 = rect_mesh(4, pattern=MeshPattern.LEFT)
    with pytest.raises(NonConformingElementError, match="straddle"):
        perturbed_pair(mesh0, square_macro, PerturbationSpec.vertex_shift(4, 2, 1.0, 0.0, 0.1))


def test_perturbed_pair_left_mesh_under_dilation(square_macro: MacroTriangulation) -> None:
    """Both macro triangles share the dilation map, so straddling Left elements transport."""
    mesh0 = rect_mesh(4, pattern=MeshPattern.LEFT)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec.dilation(square_macro.polygon, 0.1))
    np.testing.assert_allclose(pair.mesh_t.nodes, 1.1 * mesh0.nodes, atol=1e-14)


def test_perturbed_pair_wrong_macro(stretch_direction: list[float]) -> None:
    """The macro triangulation must be the one the mesh came from."""
    other = fan_macro_triangulation(PolygonSpec.from_points([(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]))
    with pytest.raises(MeshError, match="not generated"):
        perturbed_pair(rect_mesh(4), other, PerturbationSpec(np.array(stretch_direction), 0.1))


@pytest.mark.parametrize("seed", _PROPERTY_SEEDS)
def test_transport_conserves_area(seed: int, square_macro: MacroTriangulation) -> None:
    """Element areas scale by |det S_j| and the transported mesh tiles the perturbed polygon."""
    rng = np.random.default_rng(seed)
    spec = PerturbationSpec(rng.uniform(-1.0, 1.0, 8), float(rng.uniform(0.0, 0.1)))
    pair = perturbed_pair(rect_mesh(6, pattern=MeshPattern.RIGHT), square_macro, spec)

    dets = np.array([m.abs_det for m in pair.element_maps])
    np.testing.assert_allclose(pair.mesh_t.element_areas, dets * pair.mesh0.element_areas, rtol=1e-12)
    assert pair.mesh_t.area == pytest.approx(perturb_polygon(square_macro.polygon, spec).area, rel=1e-12)
