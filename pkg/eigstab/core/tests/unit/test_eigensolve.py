"""Unit tests for the sparse eigensolver and the small dense pencil."""

import math

import numpy as np
import pytest
from scipy import sparse

from eigstab.core.eigensolve import EigenPair, EigenSolverOptions, dense_gep, residual, smallest_pairs
from eigstab.core.exceptions import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SingularNError,
    SolverError,
)
from eigstab.core.fem import SparseSym, assemble
from eigstab.core.geometry import MacroTriangulation, PerturbationSpec
from eigstab.core.mesh import MeshPattern, TriMesh, perturbed_pair, rect_mesh

_PROPERTY_SEEDS = range(100)
_TWO_PI2 = 2.0 * math.pi**2


def _b_gram(b: SparseSym, pairs: list[EigenPair]) -> np.ndarray:
    x = np.column_stack([p.vector for p in pairs])
    return x.T @ (b.matrix @ x)


def test_options_validation() -> None:
    """Out-of-range options are rejected."""
    with pytest.raises(SolverError, match="tol"):
        EigenSolverOptions(tol=1.0)
    with pytest.raises(SolverError, match="max_iter"):
        EigenSolverOptions(max_iter=0)
    with pytest.raises(SolverError, match="residual_limit"):
        EigenSolverOptions(residual_limit=0.0)


def test_single_dof_problem() -> None:
    """The one-dof Crossed cell has lambda = 24 and a B-normalized vector."""
    a, b, _ = assemble(rect_mesh(1, pattern=MeshPattern.CROSSED))
    (pair,) = smallest_pairs(a, b, 1)
    assert math.isclose(pair.value, 24.0, rel_tol=1e-13)
    assert math.isclose(abs(pair.vector[0]), math.sqrt(6.0), rel_tol=1e-13)
    assert residual(a, b, pair) <= 1e-14


def test_unit_square_spectrum() -> None:
    """lambda_1 approximates 2 pi^2 from above; lambda_2 = lambda_3 on the fully symmetric Crossed mesh."""
    a, b, _ = assemble(rect_mesh(64, pattern=MeshPattern.CROSSED))
    pairs = smallest_pairs(a, b, 3)
    values = [p.value for p in pairs]
    assert 19.7392 <= values[0] <= 19.80
    assert abs(values[1] - values[2]) <= 1e-10 * values[1]
    np.testing.assert_allclose(_b_gram(b, pairs), np.eye(3), atol=1e-10)


def test_dense_and_shift_invert_agree() -> None:
    """Both solver paths find the same eigenvalues."""
    a, b, _ = assemble(rect_mesh(12))
    dense = smallest_pairs(a, b, 4)
    iterative = smallest_pairs(a, b, 4, options=EigenSolverOptions(dense_threshold=0))
    np.testing.assert_allclose([p.value for p in iterative], [p.value for p in dense], rtol=1e-10)
    np.testing.assert_allclose(_b_gram(b, iterative), np.eye(4), atol=1e-10)
    for p in iterative:
        assert residual(a, b, p) <= 1e-10


def test_values_ascend(crossed_8: TriMesh) -> None:
    """Eigenvalues come back in ascending order."""
    a, b, _ = assemble(crossed_8)
    values = [p.value for p in smallest_pairs(a, b, 6)]
    assert values == sorted(values)


def test_count_out_of_range(crossed_8: TriMesh) -> None:
    """m must lie between 1 and the dimension."""
    a, b, _ = assemble(crossed_8)
    with pytest.raises(SolverError, match="cannot compute 0"):
        smallest_pairs(a, b, 0)
    with pytest.raises(SolverError):
        smallest_pairs(a, b, a.dimension + 1)


def test_dimension_mismatch(crossed_8: TriMesh, left_8: TriMesh) -> None:
    """A and B must have one dimension."""
    a, _, _ = assemble(crossed_8)
    _, b, _ = assemble(left_8)
    with pytest.raises(DimensionMismatchError):
        smallest_pairs(a, b, 1)


def test_negative_definite_stiffness() -> None:
    """A negative smallest eigenvalue is reported."""
    eye = sparse.identity(3, format="csr")
    with pytest.raises(NotPositiveDefiniteError, match="not positive"):
        smallest_pairs(SparseSym(-eye), SparseSym(eye), 1)


def test_indefinite_mass() -> None:
    """An indefinite B fails the dense factorization."""
    eye = sparse.identity(3, format="csr")
    b = SparseSym(sparse.diags([1.0, -1.0, 1.0], format="csr"))
    with pytest.raises(NotPositiveDefiniteError):
        smallest_pairs(SparseSym(eye), b, 1)


def test_dilation_covariance(square_macro: MacroTriangulation) -> None:
    """Scaling the mesh by 1 + t divides every eigenvalue by (1 + t)^2."""
    t = 0.1
    mesh0 = rect_mesh(10, pattern=MeshPattern.CROSSED)
    pair = perturbed_pair(mesh0, square_macro, PerturbationSpec.dilation(square_macro.polygon, t))
    a0, b0, _ = assemble(pair.mesh0)
    at, bt, _ = assemble(pair.mesh_t)
    values0 = np.array([p.value for p in smallest_pairs(a0, b0, 4)])
    values_t = np.array([p.value for p in smallest_pairs(at, bt, 4)])
    np.testing.assert_allclose(values_t, values0 / (1.0 + t) ** 2, rtol=1e-10)


@pytest.mark.parametrize("seed", _PROPERTY_SEEDS)
def test_b_gram_orthonormality(seed: int, square_macro: MacroTriangulation) -> None:
    """Returned vectors are B-orthonormal on randomly perturbed meshes, on both solver paths."""
    rng = np.random.default_rng(seed)
    spec = PerturbationSpec(rng.uniform(-1.0, 1.0, 8), float(rng.uniform(0.0, 0.1)))
    mesh_t = perturbed_pair(rect_mesh(8, pattern=MeshPattern.RIGHT), square_macro, spec).mesh_t
    a, b, _ = assemble(mesh_t)
    count = int(rng.integers(1, 7))
    options = EigenSolverOptions(dense_threshold=0) if seed % 2 else EigenSolverOptions()

    pairs = smallest_pairs(a, b, count, options=options)

    np.testing.assert_allclose(_b_gram(b, pairs), np.eye(count), atol=1e-10)


def test_residual_of_exact_pair() -> None:
    """An exact pair of a 1x1 pencil has zero residual."""
    a = SparseSym(sparse.csr_matrix([[4.0]]))
    b = SparseSym(sparse.csr_matrix([[2.0]]))
    assert residual(a, b, EigenPair(2.0, np.array([1.0]))) == 0.0
    with pytest.raises(DimensionMismatchError):
        residual(a, b, EigenPair(2.0, np.array([1.0, 0.0])))


def test_dense_gep_diagonal() -> None:
    """A diagonal pencil returns its ratios, sorted, with unit vectors."""
    pairs = dense_gep(np.diag([6.0, 1.0]), np.diag([2.0, 1.0]))
    assert [p.value.real for p in pairs] == pytest.approx([1.0, 3.0])
    for p in pairs:
        assert math.isclose(np.linalg.norm(p.vector), 1.0)
    assert abs(pairs[0].vector[1]) == pytest.approx(1.0)


@pytest.mark.parametrize("seed", _PROPERTY_SEEDS)
def test_dense_gep_matches_characteristic_polynomial(seed: int) -> None:
    """Eigenvalues of a random 2x2 pencil are the roots of det(M - mu N)."""
    rng = np.random.default_rng(seed)
    while True:
        m = rng.standard_normal((2, 2))
        n = rng.standard_normal((2, 2))
        qa = np.linalg.det(n)
        qb = -(m[0, 0] * n[1, 1] + m[1, 1] * n[0, 0] - m[0, 1] * n[1, 0] - m[1, 0] * n[0, 1])
        qc = np.linalg.det(m)
        disc = qb * qb - 4.0 * qa * qc
        if abs(qa) > 0.2 and abs(disc) > 0.1:
            break
    sq = np.sqrt(complex(disc))
    roots = [(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)]

    values = [p.value for p in dense_gep(m, n)]

    for root in roots:
        assert min(abs(v - root) for v in values) <= 1e-10 * (1.0 + abs(root))


def test_dense_gep_singular_n() -> None:
    """A singular right-hand matrix is rejected before QZ."""
    with pytest.raises(SingularNError):
        dense_gep(np.eye(2), np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_dense_gep_shapes() -> None:
    """Both matrices must be square and of one size."""
    with pytest.raises(DimensionMismatchError):
        dense_gep(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatchError):
        dense_gep(np.ones((2, 3)), np.ones((2, 3)))
