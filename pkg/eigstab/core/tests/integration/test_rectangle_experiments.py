"""Stretched unit square at full resolution: exact quotients, closed forms and antisymmetry."""

import math

import numpy as np
import pytest

from eigstab.core.analytic import PI2, stretch_gaps
from eigstab.core.eigensolve import EigenSolverOptions, smallest_pairs
from eigstab.core.fem import assemble
from eigstab.core.geometry import MacroTriangulation, PerturbationSpec
from eigstab.core.mesh import MatchedMeshPair, MeshPattern, perturbed_pair, rect_mesh
from eigstab.core.metrics import ReflectionAxis, antisymmetry
from eigstab.core.stabilize import ClusterSpec, StabilizedCluster, WeightMode, stabilize_cluster

pytestmark = pytest.mark.integration

_CLUSTER = ClusterSpec(2, 3)
_ANTISYMMETRY_LIMIT = 5e-3


def _stretch(
    square_macro: MacroTriangulation, stretch_direction: list[float], n: int, pattern: MeshPattern, eps: float
) -> MatchedMeshPair:
    perturbation = PerturbationSpec(np.array(stretch_direction), eps)
    return perturbed_pair(rect_mesh(n, pattern=pattern), square_macro, perturbation)


def _antisymmetry_pair(result: StabilizedCluster, eps: float) -> tuple[float, float]:
    u2, u3 = result.functions_on_Kt
    return (
        antisymmetry(u2, ReflectionAxis.vertical((1.0 + eps) / 2.0)),
        antisymmetry(u3, ReflectionAxis.horizontal(0.5)),
    )


def test_exact_quotients_with_det_weight(
    square_macro: MacroTriangulation, stretch_direction: list[float], solver_options: EigenSolverOptions
) -> None:
    """Crossed n=32, t=0.1: mu_i equals (lambda_i^t - lambda_i^0)/t from two eigensolves.

    The identity needs one lambda_ref equal to both unperturbed values, which only Crossed gives.
    """
    pair = _stretch(square_macro, stretch_direction, 32, MeshPattern.CROSSED, 0.1)
    result = stabilize_cluster(pair, _CLUSTER, WeightMode.DET, solver_options)
    np.testing.assert_allclose(result.quotients, result.direct_quotients, rtol=1e-7)


@pytest.mark.parametrize(
    ("mode", "factor"),
    [(WeightMode.DET, 2.1 / 1.21), (WeightMode.RATE, 1.0)],
)
def test_dilation_closed_forms(
    square_macro: MacroTriangulation, solver_options: EigenSolverOptions, mode: WeightMode, factor: float
) -> None:
    """Uniform dilation by 1.1 on Crossed n=32."""
    mesh0 = rect_mesh(32, pattern=MeshPattern.CROSSED)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec.dilation(square_macro.polygon, 0.1))
    result = stabilize_cluster(pair, _CLUSTER, mode, solver_options)
    np.testing.assert_allclose(result.quotients, -factor * result.eigenvalues0, rtol=1e-9)


@pytest.mark.parametrize(
    ("eps", "mu2", "mu3"),
    [(1e-1, -75.4, -18.86), (1e-5, -79.03, -19.76), (1e-10, -79.03, -19.76)],
)
def test_stretch_quotients_at_n64(
    square_macro: MacroTriangulation,
    stretch_direction: list[float],
    solver_options: EigenSolverOptions,
    eps: float,
    mu2: float,
    mu3: float,
) -> None:
    """Rate weight, Left n=64: quotients and antisymmetry of the stabilized modes."""
    pair = _stretch(square_macro, stretch_direction, 64, MeshPattern.LEFT, eps)
    result = stabilize_cluster(pair, _CLUSTER, WeightMode.RATE, solver_options)

    assert result.quotients[0] == pytest.approx(mu2, abs=0.8)
    assert result.quotients[1] == pytest.approx(mu3, abs=0.2)
    a2, a3 = _antisymmetry_pair(result, eps)
    assert a2 <= _ANTISYMMETRY_LIMIT
    assert a3 <= _ANTISYMMETRY_LIMIT


def test_det_weight_near_the_limit(
    square_macro: MacroTriangulation, stretch_direction: list[float], solver_options: EigenSolverOptions
) -> None:
    """Left n=64, eps=1e-5: the det-weight quotients are within 0.5% of -8 pi^2 and -2 pi^2."""
    pair = _stretch(square_macro, stretch_direction, 64, MeshPattern.LEFT, 1e-5)
    result = stabilize_cluster(pair, _CLUSTER, WeightMode.DET, solver_options)
    assert result.quotients[0] == pytest.approx(-8.0 * PI2, rel=5e-3)
    assert result.quotients[1] == pytest.approx(-2.0 * PI2, rel=5e-3)


@pytest.mark.parametrize("pattern", list(MeshPattern))
def test_stabilized_modes_on_every_pattern(
    square_macro: MacroTriangulation,
    stretch_direction: list[float],
    solver_options: EigenSolverOptions,
    pattern: MeshPattern,
) -> None:
    """eps=1e-5, n=64: the O(h^2) split of Left and Right does not stop the axis modes from being recovered."""
    pair = _stretch(square_macro, stretch_direction, 64, pattern, 1e-5)
    result = stabilize_cluster(pair, _CLUSTER, WeightMode.RATE, solver_options)

    assert result.quotients[0] == pytest.approx(-79.03, abs=0.8)
    assert result.quotients[1] == pytest.approx(-19.76, abs=0.2)
    a2, a3 = _antisymmetry_pair(result, 1e-5)
    assert a2 <= _ANTISYMMETRY_LIMIT
    assert a3 <= _ANTISYMMETRY_LIMIT


def test_fem_gap_matches_separable_spectrum(
    square_macro: MacroTriangulation, stretch_direction: list[float], solver_options: EigenSolverOptions
) -> None:
    """At eps=0.1 the discrete gap is within 2% of 3 pi^2 (1 - 1.1^-2)."""
    pair = _stretch(square_macro, stretch_direction, 64, MeshPattern.LEFT, 0.1)
    result = stabilize_cluster(pair, _CLUSTER, WeightMode.RATE, solver_options)
    separable, _ = stretch_gaps(0.1)
    fem_gap = result.eigenvalues_t[1] - result.eigenvalues_t[0]
    assert fem_gap == pytest.approx(separable, rel=0.02)
    assert math.isclose(separable, 5.139, abs_tol=1e-3)


@pytest.mark.parametrize("pattern", list(MeshPattern))
def test_unperturbed_cluster_multiplicity(pattern: MeshPattern, solver_options: EigenSolverOptions) -> None:
    """n=64: Crossed keeps lambda_2 = lambda_3; a single diagonal direction splits them by about 2.4 h^2."""
    a, b, _ = assemble(rect_mesh(64, pattern=pattern))
    values = [p.value for p in smallest_pairs(a, b, 3, options=solver_options)]
    split = abs(values[2] - values[1]) / values[1]
    if pattern is MeshPattern.CROSSED:
        assert split <= 1e-10
    else:
        assert split == pytest.approx(5.787e-4, rel=0.01)
