"""Shape-difference-quotient stabilization of clustered Dirichlet eigenfunctions.

Given matched meshes of K^0 and K^t, the eigenfunctions of a cluster on K^t are
pulled back to K^0 and combined so that each combination satisfies the weak
identity relating the two eigenproblems. The combination coefficients and the
difference quotients D_t(lambda_i) come from a small generalized eigenproblem
whose matrices are built from the bilinear forms ``tilde_a`` and ``tilde_b``.
"""

from __future__ import annotations

import concurrent.futures
import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property

import numpy as np
from opentelemetry import trace
from scipy import sparse

from eigstab.core.eigensolve import EigenPair, EigenSolverOptions, dense_gep, residual, smallest_pairs
from eigstab.core.exceptions import (
    ComplexQuotientsError,
    DimensionMismatchError,
    MeshMismatchError,
    RankDeficientBasisError,
    StabilizeError,
    ZeroPerturbationError,
)
from eigstab.core.fem import DofMap, FEFunction, assemble, weighted_mass, weighted_stiffness
from eigstab.core.geometry import FloatArray
from eigstab.core.mesh import MatchedMeshPair, TriMesh

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

THREADS_ENV = "EIGSTAB_THREADS"
IMAG_TOL = 1e-8
TIE_TOL = 1e-10
SPREAD_WARN = 1e-6
GRAM_COND_LIMIT = 1e8
GRAM_COND_WARN = 1e6


class WeightMode(StrEnum):
    """Element weight of the right-hand form.

    ``rate`` uses the area-change rate d_j = (|det S_j| - 1) / t, ``det`` uses |det S_j|.
    """

    RATE = "rate"
    DET = "det"


@dataclass(frozen=True, eq=False)
class ElementCoeffs:
    """Per-element perturbation data of a matched mesh pair.

    Attributes:
        P: (S^-1 S^-T - I) / t, shape (m, 2, 2).
        d: (|det S| - 1) / t, shape (m,).
        det: |det S|, shape (m,).
        inv_T: S^-T, shape (m, 2, 2).
        t: Perturbation magnitude.
    """

    P: FloatArray
    d: FloatArray
    det: FloatArray
    inv_T: FloatArray
    t: float

    def __post_init__(self) -> None:
        """Check shapes."""
        m = self.d.shape[0]
        if self.P.shape != (m, 2, 2) or self.inv_T.shape != (m, 2, 2) or self.det.shape != (m,):
            raise DimensionMismatchError("element coefficient arrays disagree in length")

    @property
    def n_elements(self) -> int:
        """Number of elements."""
        return int(self.d.shape[0])


@dataclass(frozen=True)
class ClusterSpec:
    """Eigenvalue indices first..last (1-based, inclusive) and an optional reference eigenvalue."""

    first: int
    last: int
    lambda_ref: float | None = None

    def __post_init__(self) -> None:
        """Check 1 <= first <= last."""
        if not 1 <= self.first <= self.last:
            raise StabilizeError(f"cluster needs 1 <= first <= last, got {self.first}..{self.last}")

    @property
    def size(self) -> int:
        """Number of eigenvalues in the cluster."""
        return self.last - self.first + 1

    @property
    def indices(self) -> range:
        """The 1-based eigenvalue indices of the cluster."""
        return range(self.first, self.last + 1)


@dataclass(frozen=True, eq=False)
class SmallSystem:
    """The dense matrices (Mt)_ij = a~(phi~_i, phi_j) and (Nt)_ij = b~(phi~_i, phi_j)."""

    Mt: FloatArray
    Nt: FloatArray
    weight_mode: WeightMode
    lambda_ref: float

    def __post_init__(self) -> None:
        """Check shape and finiteness."""
        if self.Mt.ndim != 2 or self.Mt.shape[0] != self.Mt.shape[1] or self.Mt.shape != self.Nt.shape:  # noqa: PLR2004
            raise DimensionMismatchError(f"Mt {self.Mt.shape} and Nt {self.Nt.shape} must be square and equal")
        if not (np.isfinite(self.Mt).all() and np.isfinite(self.Nt).all()):
            raise StabilizeError("small system has non-finite entries")

    @property
    def size(self) -> int:
        """Cluster size M."""
        return int(self.Mt.shape[0])


@dataclass(frozen=True, eq=False)
class StabilizedCluster:
    """Result of stabilize_cluster.

    ``quotients`` ascend; ``coefficients[:, i]`` combines the perturbed basis into
    ``functions_on_Kt[i]``. ``standard_functions`` are the raw eigenfunctions on K^t
    that plain FEM returns for the same cluster.
    """

    cluster: ClusterSpec
    quotients: FloatArray
    coefficients: FloatArray
    functions_on_Kt: tuple[FEFunction, ...]
    functions_on_K0: tuple[FEFunction, ...]
    standard_functions: tuple[FEFunction, ...]
    eigenvalues0: FloatArray
    eigenvalues_t: FloatArray
    lambda_ref: float
    system: SmallSystem
    t: float
    residuals: FloatArray
    unresolved: bool = False

    @cached_property
    def direct_quotients(self) -> FloatArray:
        """(lambda_i^t - lambda_i^0) / t from the two eigensolves."""
        return (self.eigenvalues_t - self.eigenvalues0) / self.t


def element_coeffs(pair: MatchedMeshPair) -> ElementCoeffs:
    """P_j, d_j and |det S_j| of every element of a matched pair.

    Raises:
        ZeroPerturbationError: If pair.t is 0.
    """
    t = pair.t
    if t == 0.0:
        raise ZeroPerturbationError("difference quotients are undefined for t = 0")
    s = pair.linear_parts
    inv = np.linalg.inv(s)
    inv_t = np.transpose(inv, (0, 2, 1))
    det = np.abs(np.linalg.det(s))
    p = (inv @ inv_t - np.eye(2)) / t
    return ElementCoeffs(P=p, d=(det - 1.0) / t, det=det, inv_T=inv_t, t=t)


def pull_back(f: FEFunction, pair: MatchedMeshPair) -> FEFunction:
    """f composed with the piecewise-affine map, as a function on mesh0.

    Raises:
        MeshMismatchError: If f does not live on pair.mesh_t.
    """
    if f.mesh is not pair.mesh_t:
        raise MeshMismatchError("function does not live on the perturbed mesh of this pair")
    return FEFunction(pair.mesh0, f.values, f.dirichlet)


def push_forward(f: FEFunction, pair: MatchedMeshPair) -> FEFunction:
    """Inverse of pull_back."""
    if f.mesh is not pair.mesh0:
        raise MeshMismatchError("function does not live on the reference mesh of this pair")
    return FEFunction(pair.mesh_t, f.values, f.dirichlet)


def _check_coeffs(mesh: TriMesh, coeffs: ElementCoeffs) -> None:
    if coeffs.n_elements != mesh.n_elements:
        raise MeshMismatchError(f"coefficients for {coeffs.n_elements} elements, mesh has {mesh.n_elements}")


def tilde_a_matrix(mesh0: TriMesh, coeffs: ElementCoeffs, lambda_ref: float) -> sparse.csr_matrix:
    """Node-level matrix of a~(u, v) on mesh0."""
    _check_coeffs(mesh0, coeffs)
    tensor = coeffs.det[:, None, None] * coeffs.P + coeffs.d[:, None, None] * np.eye(2)
    return (weighted_stiffness(mesh0, tensor) - lambda_ref * weighted_mass(mesh0, coeffs.d)).tocsr()


def tilde_b_matrix(mesh0: TriMesh, coeffs: ElementCoeffs, mode: WeightMode) -> sparse.csr_matrix:
    """Node-level matrix of b~(u, v) on mesh0."""
    _check_coeffs(mesh0, coeffs)
    weights = coeffs.d if WeightMode(mode) is WeightMode.RATE else coeffs.det
    return weighted_mass(mesh0, weights)


def _same_mesh(u: FEFunction, v: FEFunction) -> TriMesh:
    if u.mesh is not v.mesh:
        raise MeshMismatchError("bilinear form of functions on different meshes")
    return u.mesh


def tilde_a(u: FEFunction, v: FEFunction, coeffs: ElementCoeffs, lambda_ref: float) -> float:
    """sum_j det_j (P_j grad u, grad v) + d_j (grad u, grad v) - lambda_ref d_j (u, v) over mesh0."""
    mesh = _same_mesh(u, v)
    return float(u.values @ (tilde_a_matrix(mesh, coeffs, lambda_ref) @ v.values))


def tilde_b(u: FEFunction, v: FEFunction, coeffs: ElementCoeffs, mode: WeightMode = WeightMode.RATE) -> float:
    """sum_j w_j (u, v) over mesh0 with w_j = d_j or |det S_j| by mode."""
    mesh = _same_mesh(u, v)
    return float(u.values @ (tilde_b_matrix(mesh, coeffs, mode) @ v.values))


def _basis_matrix(basis: Sequence[FEFunction], mesh: TriMesh) -> FloatArray:
    for f in basis:
        if f.mesh is not mesh:
            raise MeshMismatchError("basis functions must all live on the reference mesh")
    return np.column_stack([f.values for f in basis])


def build_small_system(
    basis_tilde: Sequence[FEFunction],
    basis_e: Sequence[FEFunction],
    coeffs: ElementCoeffs,
    cluster: ClusterSpec,
    mode: WeightMode = WeightMode.RATE,
) -> SmallSystem:
    """Assemble Mt and Nt; rows follow basis_tilde, columns follow basis_e.

    ``cluster.lambda_ref`` must be set.

    Raises:
        RankDeficientBasisError: If basis_tilde is numerically linearly dependent.
    """
    if cluster.lambda_ref is None:
        raise StabilizeError("build_small_system needs cluster.lambda_ref")
    if len(basis_tilde) != cluster.size or len(basis_e) != cluster.size:
        raise DimensionMismatchError(
            f"cluster of size {cluster.size} needs bases of that length, got {len(basis_tilde)} and {len(basis_e)}"
        )
    mesh0 = basis_tilde[0].mesh
    phi_tilde = _basis_matrix(basis_tilde, mesh0)
    phi = _basis_matrix(basis_e, mesh0)

    gram = phi_tilde.T @ (weighted_mass(mesh0) @ phi_tilde)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
        raise RankDeficientBasisError(f"perturbed basis Gram matrix has condition number {cond:.3e}")
    if cond > GRAM_COND_WARN:
        logger.warning("perturbed basis is nearly dependent (Gram condition number %.3e)", cond)

    mt = phi_tilde.T @ (tilde_a_matrix(mesh0, coeffs, cluster.lambda_ref) @ phi)
    nt = phi_tilde.T @ (tilde_b_matrix(mesh0, coeffs, mode) @ phi)
    return SmallSystem(Mt=mt, Nt=nt, weight_mode=WeightMode(mode), lambda_ref=float(cluster.lambda_ref))


def _worker_count(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "")
        threads = int(raw) if raw.strip().isdigit() else 2
    return max(1, min(2, threads))


def _solve(
    mesh: TriMesh, count: int, options: EigenSolverOptions, span_name: str
) -> tuple[list[EigenPair], list[float]]:
    with tracer.start_as_current_span(span_name, attributes={"nodes": mesh.n_nodes, "count": count}):
        a, b, _ = assemble(mesh)
        pairs = smallest_pairs(a, b, count, options=options)
        return pairs, [residual(a, b, p) for p in pairs]


def _real_coefficients(vector: np.ndarray) -> FloatArray:
    # eigenvectors of a real eigenvalue are real up to a complex phase
    k = int(np.argmax(np.abs(vector)))
    rotated = vector * np.exp(-1j * np.angle(vector[k]))
    return np.real(rotated)


def _normalized(values: FloatArray, mass: sparse.csr_matrix) -> FloatArray:
    nrm = float(np.sqrt(values @ (mass @ values)))
    if nrm == 0.0:
        raise RankDeficientBasisError("reconstructed eigenfunction vanishes")
    values = values / nrm
    if values[int(np.argmax(np.abs(values)))] < 0.0:
        values = -values
    return values


def stabilize_cluster(
    pair: MatchedMeshPair,
    cluster: ClusterSpec,
    mode: WeightMode = WeightMode.RATE,
    options: EigenSolverOptions | None = None,
    threads: int | None = None,
) -> StabilizedCluster:
    """Stabilized eigenfunctions on K^t and difference quotients of a cluster.

    Solves the eigenproblem on both meshes (concurrently when threads allow),
    pulls the perturbed cluster basis back to K^0, solves the small pencil and
    recombines the perturbed eigenfunctions with its eigenvectors.

    Args:
        pair: Matched meshes of K^0 and K^t with t > 0.
        cluster: Eigenvalue indices of the cluster; lambda_ref defaults to the
            mean of the cluster eigenvalues on K^0.
        mode: Element weight of the right-hand form.
        options: Eigensolver options.
        threads: Parallel eigensolves (1 or 2), defaults to EIGSTAB_THREADS or 2.

    Raises:
        ZeroPerturbationError: If pair.t is 0.
        RankDeficientBasisError: If the perturbed cluster basis is dependent.
        ComplexQuotientsError: If a quotient has a significant imaginary part.
        SingularNError: If Nt is singular.
        NoConvergenceError: Propagated from the eigensolver.
    """
    mode = WeightMode(mode)
    options = options or EigenSolverOptions()
    coeffs = element_coeffs(pair)
    count = cluster.last
    lo = cluster.first - 1

    with tracer.start_as_current_span(
        "stabilize.cluster",
        attributes={"first": cluster.first, "last": cluster.last, "t": pair.t, "weight_mode": str(mode)},
    ) as span:
        workers = _worker_count(threads)
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            future0 = executor.submit(_solve, pair.mesh0, count, options, "stabilize.reference_solve")
            future_t = executor.submit(_solve, pair.mesh_t, count, options, "stabilize.perturbed_solve")
            pairs0, residuals0 = future0.result()
            pairs_t, residuals_t = future_t.result()

        dofs_mesh0 = DofMap.from_mesh(pair.mesh0)
        lambdas0 = np.array([p.value for p in pairs0[lo:count]])
        lambdas_t = np.array([p.value for p in pairs_t[lo:count]])
        basis_e = [FEFunction.from_interior(pair.mesh0, dofs_mesh0, p.vector) for p in pairs0[lo:count]]
        standard = tuple(FEFunction.from_interior(pair.mesh_t, dofs_mesh0, p.vector) for p in pairs_t[lo:count])
        basis_tilde = [pull_back(f, pair) for f in standard]

        lambda_ref = float(lambdas0.mean()) if cluster.lambda_ref is None else float(cluster.lambda_ref)
        spread = float(lambdas0.max() - lambdas0.min()) / abs(lambda_ref)
        if spread > SPREAD_WARN:
            logger.warning(
                "cluster %d..%d is split on K^0 (relative spread %.3e); using the mean %.10g as reference",
                cluster.first,
                cluster.last,
                spread,
                lambda_ref,
            )
        resolved_cluster = ClusterSpec(cluster.first, cluster.last, lambda_ref)

        with tracer.start_as_current_span("stabilize.small_system"):
            system = build_small_system(basis_tilde, basis_e, coeffs, resolved_cluster, mode)

        with tracer.start_as_current_span("stabilize.pencil"):
            # coefficients of u_i^t in the perturbed basis solve Mt^T s = mu Nt^T s
            small_pairs = dense_gep(system.Mt.T, system.Nt.T)
        for sp in small_pairs:
            if abs(sp.value.imag) > IMAG_TOL * (1.0 + abs(sp.value.real)):
                raise ComplexQuotientsError(f"difference quotient {sp.value} is not real")
        quotients = np.array([sp.value.real for sp in small_pairs])
        sigma = np.column_stack([_real_coefficients(sp.vector) for sp in small_pairs])

        gaps = np.diff(quotients)
        unresolved = bool((gaps <= TIE_TOL * (1.0 + np.abs(quotients[1:]))).any())
        if unresolved:
            logger.warning("difference quotients %s coincide; sub-cluster left unresolved", quotients.tolist())

        with tracer.start_as_current_span("stabilize.reconstruct"):
            mass_t = weighted_mass(pair.mesh_t)
            raw = np.column_stack([f.values for f in standard]) @ sigma
            on_kt = tuple(FEFunction(pair.mesh_t, _normalized(raw[:, i], mass_t)) for i in range(cluster.size))
        on_k0 = tuple(pull_back(f, pair) for f in on_kt)
        span.set_attribute("quotients", quotients.tolist())

    logger.info(
        "cluster %d..%d t=%.3g mode=%s: quotients %s",
        cluster.first,
        cluster.last,
        pair.t,
        mode,
        np.array2string(quotients, precision=6),
    )
    return StabilizedCluster(
        cluster=resolved_cluster,
        quotients=quotients,
        coefficients=sigma,
        functions_on_Kt=on_kt,
        functions_on_K0=on_k0,
        standard_functions=standard,
        eigenvalues0=lambdas0,
        eigenvalues_t=lambdas_t,
        lambda_ref=lambda_ref,
        system=system,
        t=pair.t,
        residuals=np.maximum(residuals0[lo:count], residuals_t[lo:count]),
        unresolved=unresolved,
    )


def standard_eigenfunctions(mesh: TriMesh, count: int, options: EigenSolverOptions | None = None) -> list[FEFunction]:
    """The first count eigenfunctions of plain FEM on mesh, B-normalized."""
    a, b, dofs = assemble(mesh)
    pairs = smallest_pairs(a, b, count, options=options)
    return [FEFunction.from_interior(mesh, dofs, p.vector) for p in pairs]

