"""Apex shifts of the equilateral triangle at six refinement levels."""

import math

import pytest

from eigstab.core.analytic import equilateral_eigenvalue
from eigstab.core.eigensolve import EigenSolverOptions, smallest_pairs
from eigstab.core.fem import assemble
from eigstab.core.geometry import MacroTriangulation, PerturbationSpec, PolygonSpec, fan_macro_triangulation
from eigstab.core.mesh import TriMesh, perturbed_pair, polygon_mesh
from eigstab.core.metrics import ReflectionAxis, antisymmetry
from eigstab.core.stabilize import ClusterSpec, WeightMode, stabilize_cluster

pytestmark = pytest.mark.integration

_EPS = 1e-6
_LEVELS = 6
_SHIFTS = {"A": (1.0, 0.0), "B": (-1.0, 0.0), "C": (0.0, 1.0), "D": (0.0, -1.0)}
_DESIGNATED = {"C": 3, "D": 2}


@pytest.fixture(scope="module")
def equilateral() -> MacroTriangulation:
    """Fan triangulation (a single macro triangle) of the unit equilateral triangle."""
    return fan_macro_triangulation(PolygonSpec.from_points([(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0)]))


@pytest.fixture(scope="module")
def equilateral_mesh(equilateral: MacroTriangulation) -> TriMesh:
    """The equilateral triangle refined six times."""
    return polygon_mesh(equilateral, _LEVELS)


def test_unperturbed_double_eigenvalue(equilateral_mesh: TriMesh, solver_options: EigenSolverOptions) -> None:
    """lambda_2 = lambda_3 on the symmetric refinement and close to 112 pi^2 / 9."""
    a, b, _ = assemble(equilateral_mesh)
    values = [p.value for p in smallest_pairs(a, b, 3, options=solver_options)]
    assert values[1] == pytest.approx(equilateral_eigenvalue(1, 2), rel=1e-2)
    assert abs(values[1] - values[2]) / values[1] <= 1e-10


@pytest.mark.parametrize("case", sorted(_SHIFTS))
def test_apex_shift(
    case: str, equilateral: MacroTriangulation, equilateral_mesh: TriMesh, solver_options: EigenSolverOptions
) -> None:
    """The quotient gap stays near 75.76 and predicts the discrete eigenvalue gap."""
    dx, dy = _SHIFTS[case]
    pair = perturbed_pair(equilateral_mesh, equilateral, PerturbationSpec.vertex_shift(3, 2, dx, dy, _EPS))
    result = stabilize_cluster(pair, ClusterSpec(2, 3), WeightMode.DET, solver_options)

    mu_gap = result.quotients[1] - result.quotients[0]
    fem_gap = result.eigenvalues_t[1] - result.eigenvalues_t[0]
    assert mu_gap == pytest.approx(75.76, abs=2.0)
    assert _EPS * mu_gap == pytest.approx(fem_gap, rel=0.1)

    if case in _DESIGNATED:
        u = result.functions_on_Kt[_DESIGNATED[case] - 2]
        assert antisymmetry(u, ReflectionAxis.vertical(0.5), tol=max(1e-9, 2.0 * _EPS)) <= 5e-3
