"""Smallest eigenpairs of the sparse pencil (A, B) and the small dense pencil (M, N)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, splu

from eigstab.core.exceptions import (
    DimensionMismatchError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    SingularNError,
    SolverError,
)
from eigstab.core.fem import SparseSym
from eigstab.core.geometry import FloatArray

logger = logging.getLogger(__name__)

type ComplexArray = npt.NDArray[np.complex128]

SINGULAR_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class EigenSolverOptions:
    """Tuning knobs of smallest_pairs.

    Attributes:
        tol: Relative accuracy requested from the iterative solver.
        max_iter: Iteration cap of the iterative solver.
        residual_limit: Largest accepted relative residual of a returned pair.
        seed: Seed of the deterministic start vector.
        dense_threshold: Dimensions up to this size are solved densely.
    """

    tol: float = 1e-12
    max_iter: int = 10_000
    residual_limit: float = 1e-8
    seed: int = 0
    dense_threshold: int = 1500

    def __post_init__(self) -> None:
        """Check value ranges."""
        if not 0.0 <= self.tol < 1.0:
            raise SolverError(f"tol must be in [0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise SolverError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.residual_limit <= 0.0:
            raise SolverError(f"residual_limit must be positive, got {self.residual_limit}")


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenvalue and interior coefficient vector of Ax = lambda Bx."""

    value: float
    vector: FloatArray


@dataclass(frozen=True, eq=False)
class SmallEigenPair:
    """Eigenvalue and unit vector of the dense pencil M sigma = mu N sigma."""

    value: complex
    vector: ComplexArray


def residual(a: SparseSym, b: SparseSym, pair: EigenPair) -> float:
    """Relative residual ||Ax - lambda Bx|| / ||Ax||."""
    if a.dimension != b.dimension or pair.vector.shape[0] != a.dimension:
        raise DimensionMismatchError("pencil and vector dimensions differ")
    ax = a.matrix @ pair.vector
    r = float(np.linalg.norm(ax - pair.value * (b.matrix @ pair.vector)))
    denom = float(np.linalg.norm(ax))
    if denom == 0.0:
        return 0.0 if r == 0.0 else float("inf")
    return r / denom


def _dense_smallest(a: SparseSym, b: SparseSym, m: int) -> tuple[FloatArray, FloatArray]:
    try:
        return scipy.linalg.eigh(a.toarray(), b.toarray(), subset_by_index=[0, m - 1])
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"dense generalized solve failed: {e}") from e


def _shift_invert_smallest(
    a: SparseSym, b: SparseSym, m: int, options: EigenSolverOptions, tol: float
) -> tuple[FloatArray, FloatArray]:
    n = a.dimension
    try:
        lu = splu(a.matrix.tocsc())
    except RuntimeError as e:
        raise NotPositiveDefiniteError(f"stiffness factorization failed: {e}") from e
    op_inv = LinearOperator(matvec=lu.solve, shape=(n, n), dtype=a.matrix.dtype)
    v0 = np.random.default_rng(options.seed).standard_normal(n)
    try:
        return eigsh(
            a.matrix,
            k=m,
            M=b.matrix,
            sigma=0.0,
            which="LM",
            OPinv=op_inv,
            v0=v0,
            tol=tol,
            maxiter=options.max_iter,
        )
    except ArpackNoConvergence as e:
        raise NoConvergenceError(f"shift-invert Lanczos did not converge: {e}", options.max_iter) from e
    except ArpackError as e:
        raise NotPositiveDefiniteError(f"shift-invert Lanczos failed: {e}") from e


def _rayleigh_ritz(a: SparseSym, b: SparseSym, x: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Re-solve the pencil on span(x); the result is B-orthonormal."""
    ar = x.T @ (a.matrix @ x)
    br = x.T @ (b.matrix @ x)
    ar = 0.5 * (ar + ar.T)
    br = 0.5 * (br + br.T)
    try:
        values, coeffs = scipy.linalg.eigh(ar, br)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"projected mass matrix is not positive definite: {e}") from e
    return values, x @ coeffs


def smallest_pairs(
    a: SparseSym,
    b: SparseSym,
    m: int,
    tol: float | None = None,
    options: EigenSolverOptions | None = None,
) -> list[EigenPair]:
    """The m smallest eigenpairs of Ax = lambda Bx, ascending and B-orthonormal.

    Within a cluster of (nearly) equal eigenvalues the individual vectors are
    arbitrary; only their span is determined.

    Raises:
        NoConvergenceError: If the solver or the residual check fails.
        NotPositiveDefiniteError: If A or B is not positive definite.
    """
    options = options or EigenSolverOptions()
    tol = options.tol if tol is None else tol
    n = a.dimension
    if b.dimension != n:
        raise DimensionMismatchError(f"A has dimension {n}, B has {b.dimension}")
    if not 1 <= m <= n:
        raise SolverError(f"cannot compute {m} eigenpairs of a {n}-dimensional problem")

    if n <= options.dense_threshold or m >= n - 1:
        values, vectors = _dense_smallest(a, b, m)
        method = "dense"
    else:
        values, vectors = _shift_invert_smallest(a, b, m, options, tol)
        method = "shift-invert"
    values, vectors = _rayleigh_ritz(a, b, vectors[:, np.argsort(values, kind="stable")])

    if values[0] <= 0.0:
        raise NotPositiveDefiniteError(f"smallest eigenvalue {values[0]:.6e} is not positive")
    pairs = [EigenPair(float(v), np.ascontiguousarray(vectors[:, i])) for i, v in enumerate(values)]
    worst = max(residual(a, b, p) for p in pairs)
    logger.debug("%s solve: n=%d m=%d lambda_1=%.10g worst residual %.2e", method, n, m, values[0], worst)
    if worst > options.residual_limit:
        raise NoConvergenceError(
            f"eigenpair residual {worst:.3e} exceeds the limit {options.residual_limit:.1e}", options.max_iter
        )
    return pairs


def dense_gep(m: npt.ArrayLike, n: npt.ArrayLike) -> list[SmallEigenPair]:
    """All eigenpairs of the small pencil (M, N) by QZ, sorted by ascending real part.

    Raises:
        DimensionMismatchError: If M and N are not square matrices of one size.
        SingularNError: If N is singular relative to its norm.
    """
    mm = np.asarray(m)
    nn = np.asarray(n)
    if mm.ndim != 2 or mm.shape[0] != mm.shape[1] or mm.shape != nn.shape:  # noqa: PLR2004
        raise DimensionMismatchError(f"pencil needs two square matrices of one size, got {mm.shape} and {nn.shape}")
    singular_values = scipy.linalg.svdvals(nn)
    if singular_values[0] == 0.0 or singular_values[-1] < SINGULAR_PIVOT_TOL * singular_values[0]:
        raise SingularNError(f"N is singular (singular values {singular_values.tolist()})")

    values, vectors = scipy.linalg.eig(mm, nn)
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    order = np.argsort(values.real, kind="stable")
    return [SmallEigenPair(complex(values[i]), vectors[:, i].astype(np.complex128)) for i in order]
