"""Turn a domain configuration into matched meshes, a perturbation and reflection axes."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from eigstab.cli.config import ConfigError, MeshConfig, PolygonDomain, RectDomain, TriangleCase, TriangleDomain
from eigstab.core.geometry import MacroTriangulation, PerturbationSpec, PolygonSpec, fan_macro_triangulation
from eigstab.core.mesh import MatchedMeshPair, MeshPattern, TriMesh, perturbed_pair, polygon_mesh, rect_mesh
from eigstab.core.metrics import REFLECTION_TOL, AxisKind, ReflectionAxis

EQUILATERAL_HEIGHT = math.sqrt(3.0) / 2.0

# apex direction (dx, dy) per triangle case
TRIANGLE_SHIFTS: Mapping[str, tuple[float, float]] = {
    "A": (1.0, 0.0),
    "B": (-1.0, 0.0),
    "C": (0.0, 1.0),
    "D": (0.0, -1.0),
}

# the mode that is exactly antisymmetric about x = 1/2 after the shift
DESIGNATED_MODE: Mapping[str, int] = {"C": 3, "D": 2}


@dataclass(frozen=True, eq=False)
class Problem:
    """An unperturbed mesh, how to perturb it, and where its modes should be antisymmetric.

    ``axes`` maps 1-based eigenvalue indices to reflection axes on the perturbed domain.
    """

    label: str
    macro: MacroTriangulation
    mesh0: TriMesh
    perturbation: PerturbationSpec
    axes: Mapping[int, ReflectionAxis] = field(default_factory=dict)
    default_axis: ReflectionAxis | None = None
    reflection_tol: float | None = None

    def axis_for(self, index: int) -> ReflectionAxis | None:
        """Reflection axis of eigenvalue index (1-based), None when there is none."""
        return self.axes.get(index, self.default_axis)

    @property
    def eps(self) -> float:
        """Magnitude of the perturbation."""
        return self.perturbation.magnitude

    def pair(self) -> MatchedMeshPair:
        """Matched meshes of K^0 and K^t.

        Raises:
            ConfigError: If the perturbation magnitude is 0.
        """
        if self.eps <= 0.0:
            raise ConfigError(f"{self.label}: a perturbation run needs eps > 0")
        return perturbed_pair(self.mesh0, self.macro, self.perturbation)

    def perturbed_mesh(self) -> TriMesh:
        """mesh_t when eps > 0, mesh0 otherwise."""
        return self.pair().mesh_t if self.eps > 0.0 else self.mesh0


def rect_problem(domain: RectDomain, n: int, pattern: MeshPattern) -> Problem:
    """(0, width) x (0, height) with its right edge moved by domain.eps."""
    w, h = domain.width, domain.height
    polygon = PolygonSpec.from_points([(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)])
    # x-coordinates of vertices 1 and 2
    direction = np.array([0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    axes: dict[int, ReflectionAxis] = {}
    if w == h:
        axes = {2: ReflectionAxis.vertical((w + domain.eps) / 2.0), 3: ReflectionAxis.horizontal(h / 2.0)}
    return Problem(
        label=f"rect {w:g}x{h:g} n={n} {MeshPattern(pattern)} eps={domain.eps:g}",
        macro=fan_macro_triangulation(polygon),
        mesh0=rect_mesh(n, w, h, pattern),
        perturbation=PerturbationSpec(direction, domain.eps),
        axes=axes,
    )


def triangle_problem(case: TriangleCase, eps: float, levels: int) -> Problem:
    """Equilateral triangle with its apex moved by eps in the direction of the case."""
    polygon = PolygonSpec.from_points([(0.0, 0.0), (1.0, 0.0), (0.5, EQUILATERAL_HEIGHT)])
    dx, dy = TRIANGLE_SHIFTS[case]
    macro = fan_macro_triangulation(polygon)
    axis = ReflectionAxis.vertical(0.5)
    return Problem(
        label=f"triangle case {case} levels={levels} eps={eps:g}",
        macro=macro,
        mesh0=polygon_mesh(macro, levels),
        perturbation=PerturbationSpec.vertex_shift(3, 2, dx, dy, eps),
        axes={2: axis, 3: axis},
        # sheared triangles are not mirror images of themselves
        reflection_tol=max(REFLECTION_TOL, 2.0 * eps),
    )


def polygon_problem(domain: PolygonDomain, levels: int) -> Problem:
    """A convex polygon refined from its fan triangulation."""
    polygon = PolygonSpec.from_points(domain.vertices)
    macro = fan_macro_triangulation(polygon, centered=domain.centered_fan)
    axis = None
    if domain.axis is not None:
        axis = ReflectionAxis(AxisKind(domain.axis.kind), domain.axis.position)
    return Problem(
        label=f"polygon k={polygon.k} levels={levels} eps={domain.eps:g}",
        macro=macro,
        mesh0=polygon_mesh(macro, levels),
        perturbation=PerturbationSpec(np.asarray(domain.direction, dtype=np.float64), domain.eps),
        default_axis=axis,
    )


def build_problem(domain: RectDomain | TriangleDomain | PolygonDomain, mesh: MeshConfig) -> Problem:
    """Dispatch on the domain kind."""
    match domain:
        case RectDomain():
            return rect_problem(domain, mesh.n, mesh.pattern)
        case TriangleDomain():
            return triangle_problem(domain.case, domain.eps, mesh.levels)
        case PolygonDomain():
            return polygon_problem(domain, mesh.levels)
    raise ConfigError(f"unsupported domain {domain!r}")
