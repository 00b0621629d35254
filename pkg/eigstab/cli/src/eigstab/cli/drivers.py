"""Experiment drivers behind the eigstab subcommands.

Every driver builds its meshes from a RunConfig, runs the computation inside an
OpenTelemetry span, writes CSV tables and VTK fields into the output directory and
returns the table it wrote.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
import threading
import time
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from opentelemetry import trace

from eigstab.cli.config import ConfigError, OutputConfig, RectDomain, RunConfig, TriangleCase, TriangleDomain
from eigstab.cli.problems import DESIGNATED_MODE, Problem, build_problem, rect_problem, triangle_problem
from eigstab.core.analytic import (
    equilateral_eigenvalue,
    rectangle_eigenvalue,
    rectangle_mode,
    stretch_gaps,
    stretch_quotients,
)
from eigstab.core.eigensolve import residual, smallest_pairs
from eigstab.core.fem import FEFunction, SparseSym, assemble, weighted_mass, weighted_stiffness
from eigstab.core.geometry import FloatArray
from eigstab.core.mesh import MeshPattern, TriMesh
from eigstab.core.metrics import antisymmetry, cross_orthogonality, gap, l2_norm
from eigstab.core.stabilize import ClusterSpec, StabilizedCluster, WeightMode, stabilize_cluster
from eigstab.shared.report import CsvTableSerializer, MeshField, ResultTable, ResultTableBuilder, VtkLegacySerializer

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

TABLE1_EPS = (1e-1, 1e-5, 1e-10)
TRIANGLE_EPS = 1e-6
TRIANGLE_CASES: tuple[TriangleCase, ...] = ("A", "B", "C", "D")
EXAMPLE1_EPS = 1e-4
STUDY_CLUSTER = ClusterSpec(2, 3)

UNITS = "lengths in domain units; eigenvalues, gaps and quotients in 1/length^2; A and residuals dimensionless"


class OutputWriter:
    """Writes CSV and VTK documents into one directory, one file at a time."""

    def __init__(self, outputs: OutputConfig) -> None:
        """Use the directory and switches of ``outputs``."""
        self._outputs = outputs
        self._lock = threading.Lock()
        self._csv = CsvTableSerializer()
        self._vtk = VtkLegacySerializer()

    def _write(self, name: str, text: str) -> Path:
        path = self._outputs.dir / name
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        logger.info("wrote %s", path)
        return path

    def table(self, name: str, table: ResultTable) -> Path | None:
        """Write ``<name>.csv`` unless CSV output is disabled."""
        if not self._outputs.emit_csv:
            return None
        return self._write(f"{name}.csv", self._csv.render(table))

    def field(self, name: str, mesh_field: MeshField) -> Path | None:
        """Write ``<name>.vtk`` unless VTK output is disabled."""
        if not self._outputs.emit_vtk:
            return None
        return self._write(f"{name}.vtk", self._vtk.render(mesh_field))


def _mesh_field(title: str, mesh: TriMesh, fields: Iterable[tuple[str, FloatArray]]) -> MeshField:
    return MeshField(
        title=title,
        points=np.asarray(mesh.nodes, dtype=np.float64),
        triangles=np.asarray(mesh.elements, dtype=np.int64),
        point_data=tuple((name, np.asarray(values, dtype=np.float64)) for name, values in fields),
    )


def _weight_note(mode: WeightMode | None) -> str:
    return f"weight_mode={mode or 'none'}; {UNITS}"


def _antisymmetry_of(problem: Problem, index: int, f: FEFunction) -> float:
    axis = problem.axis_for(index)
    if axis is None:
        return math.nan
    return antisymmetry(f, axis, problem.reflection_tol)


def _case_workers(config: RunConfig, cases: int) -> int:
    return max(1, min(cases, config.threads or 1))


def _stabilize(problem: Problem, cluster: ClusterSpec, mode: WeightMode, config: RunConfig) -> StabilizedCluster:
    return stabilize_cluster(problem.pair(), cluster, mode, config.solver.options(), threads=config.threads)


def run_mesh(config: RunConfig) -> ResultTable:
    """Mesh statistics of K^0 (and K^t when eps > 0) plus VTK files with a boundary indicator."""
    writer = OutputWriter(config.outputs)
    with tracer.start_as_current_span("driver.mesh", attributes={"domain": config.domain.kind}):
        problem = build_problem(config.domain, config.mesh)
        meshes = [("K0", problem.mesh0)]
        if problem.eps > 0.0:
            meshes.append(("Kt", problem.pair().mesh_t))

    builder = ResultTableBuilder(
        ("mesh", "nodes", "elements", "interior_dofs", "area", "diameter"),
        header_notes=(f"{problem.label}; {_weight_note(None)}",),
    )
    for name, mesh in meshes:
        builder.add_row(
            {
                "mesh": name,
                "nodes": mesh.n_nodes,
                "elements": mesh.n_elements,
                "interior_dofs": int(mesh.interior_nodes.size),
                "area": mesh.area,
                "diameter": mesh.diameter,
            }
        )
        boundary = np.zeros(mesh.n_nodes)
        boundary[mesh.boundary_nodes] = 1.0
        writer.field(f"mesh_{name}", _mesh_field(f"{problem.label} {name}", mesh, [("boundary", boundary)]))
    table = builder.snapshot()
    writer.table("mesh", table)
    return table


def run_solve(config: RunConfig) -> ResultTable:
    """Smallest eigenpairs up to cluster.last on the perturbed domain (K^0 when eps = 0)."""
    writer = OutputWriter(config.outputs)
    problem = build_problem(config.domain, config.mesh)
    count = config.cluster.last
    with tracer.start_as_current_span("driver.solve", attributes={"domain": config.domain.kind, "count": count}):
        mesh = problem.perturbed_mesh()
        a, b, dofs = assemble(mesh)
        pairs = smallest_pairs(a, b, count, options=config.solver.options())

    builder = ResultTableBuilder(
        ("index", "lambda", "residual"),
        header_notes=(f"{problem.label}; {_weight_note(None)}",),
    )
    for index, pair in enumerate(pairs, start=1):
        builder.add_row({"index": index, "lambda": pair.value, "residual": residual(a, b, pair)})
        if index >= config.cluster.first:
            u = FEFunction.from_interior(mesh, dofs, pair.vector)
            writer.field(f"solve_u{index}", _mesh_field(f"{problem.label} u_{index}", mesh, [(f"u_{index}", u.values)]))
    table = builder.snapshot()
    writer.table("eigen", table)
    return table


def run_stabilize(config: RunConfig) -> ResultTable:
    """Stabilized eigenfunctions and difference quotients of the configured cluster.

    Raises:
        ConfigError: If the domain is not perturbed (eps = 0).
    """
    writer = OutputWriter(config.outputs)
    problem = build_problem(config.domain, config.mesh)
    mode = config.weight_mode_or(WeightMode.RATE)
    cluster = ClusterSpec(config.cluster.first, config.cluster.last)
    with tracer.start_as_current_span("driver.stabilize", attributes={"domain": config.domain.kind}):
        result = _stabilize(problem, cluster, mode, config)

    sigma_columns = [f"sigma_{k}" for k in cluster.indices]
    builder = ResultTableBuilder(
        ("index", "mu", "direct_quotient", "lambda_0", "lambda_t", "residual", "A", "A_standard", *sigma_columns),
        header_notes=(f"{problem.label}; {_weight_note(mode)}",),
    )
    for i, index in enumerate(cluster.indices):
        row = {
            "index": index,
            "mu": float(result.quotients[i]),
            "direct_quotient": float(result.direct_quotients[i]),
            "lambda_0": float(result.eigenvalues0[i]),
            "lambda_t": float(result.eigenvalues_t[i]),
            "residual": float(result.residuals[i]),
            "A": _antisymmetry_of(problem, index, result.functions_on_Kt[i]),
            "A_standard": _antisymmetry_of(problem, index, result.standard_functions[i]),
        }
        row.update({name: float(result.coefficients[k, i]) for k, name in enumerate(sigma_columns)})
        builder.add_row(row)
        writer.field(
            f"stabilize_u{index}",
            _mesh_field(
                f"{problem.label} u_{index}",
                result.functions_on_Kt[i].mesh,
                [
                    (f"u_{index}", result.functions_on_Kt[i].values),
                    (f"standard_u_{index}", result.standard_functions[i].values),
                ],
            ),
        )
    builder.add_footer(f"lambda_ref={result.lambda_ref:.10e}")
    if result.unresolved:
        builder.add_footer("quotients coincide; the sub-cluster is not resolved by this perturbation")
    table = builder.snapshot()
    writer.table("stabilize", table)
    return table


TABLE1_COLUMNS = (
    "pattern",
    "eps",
    "method",
    "gap_fem",
    "gap_analytic",
    "gap_table",
    "mu_2",
    "mu_3",
    "mu_2_limit",
    "mu_3_limit",
    "A_2",
    "A_3",
    "residual",
)


def run_table1(
    config: RunConfig,
    eps_values: Sequence[float] = TABLE1_EPS,
    patterns: Sequence[MeshPattern] | None = None,
) -> ResultTable:
    """Standard FEM against the stabilized cluster {2, 3} on the stretched unit square.

    One standard and one proposed row per (pattern, eps); the mesh size comes from
    config.mesh.n and the patterns default to config.mesh.pattern.
    """
    writer = OutputWriter(config.outputs)
    mode = config.weight_mode_or(WeightMode.RATE)
    patterns = tuple(MeshPattern(p) for p in patterns) if patterns else (config.mesh.pattern,)
    n = config.mesh.n
    columns = TABLE1_COLUMNS + (("time_s",) if config.outputs.include_timings else ())
    builder = ResultTableBuilder(
        columns,
        header_notes=(f"rectangle (0,1+eps)x(0,1); n={n}; cluster 2..3; {_weight_note(mode)}",),
    )

    def run_case(p_idx: int, pattern: MeshPattern, e_idx: int, eps: float) -> None:
        with tracer.start_as_current_span("driver.table1.case", attributes={"pattern": str(pattern), "eps": eps}):
            start = time.perf_counter()
            problem = rect_problem(RectDomain(eps=eps), n, pattern)
            result = _stabilize(problem, STUDY_CLUSTER, mode, config)
            elapsed = time.perf_counter() - start

        gap_analytic, gap_table = stretch_gaps(eps)
        limit2, limit3 = stretch_quotients(eps, mode)
        common = {
            "pattern": str(pattern),
            "eps": eps,
            "gap_fem": gap(result.eigenvalues_t, 1, 2),
            "gap_analytic": gap_analytic,
            "gap_table": gap_table,
            "mu_2_limit": limit2,
            "mu_3_limit": limit3,
            "residual": float(result.residuals.max()),
        }
        if config.outputs.include_timings:
            common["time_s"] = elapsed
        for m_idx, (method, mu, functions) in enumerate(
            (
                ("standard", result.direct_quotients, result.standard_functions),
                ("proposed", result.quotients, result.functions_on_Kt),
            )
        ):
            builder.add_row(
                {
                    **common,
                    "method": method,
                    "mu_2": float(mu[0]),
                    "mu_3": float(mu[1]),
                    "A_2": _antisymmetry_of(problem, 2, functions[0]),
                    "A_3": _antisymmetry_of(problem, 3, functions[1]),
                },
                order_key=(p_idx, e_idx, m_idx),
            )
        mesh_t = result.functions_on_Kt[0].mesh
        writer.field(
            f"table1_{pattern}_eps{eps:.0e}",
            _mesh_field(
                problem.label,
                mesh_t,
                [
                    ("standard_u_2", result.standard_functions[0].values),
                    ("standard_u_3", result.standard_functions[1].values),
                    ("u_2", result.functions_on_Kt[0].values),
                    ("u_3", result.functions_on_Kt[1].values),
                ],
            ),
        )
        logger.info("table1 %s eps=%.0e: quotients %s", pattern, eps, np.array2string(result.quotients, precision=4))

    cases = [
        (p_idx, pattern, e_idx, eps)
        for p_idx, pattern in enumerate(patterns)
        for e_idx, eps in enumerate(eps_values)
    ]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_case_workers(config, len(cases))) as executor:
        futures = [executor.submit(run_case, *case) for case in cases]
        for future in futures:
            future.result()

    builder.add_footer(
        "gap_analytic = 3*pi^2*(1-(1+eps)^-2) from the separable spectrum; "
        "gap_table = 4*pi^2*(1-(1+eps)^-2) is the reference gap of the stretched square"
    )
    builder.add_footer(f"mu_2_limit and mu_3_limit are the continuum quotients of the stretch for weight_mode={mode}")
    builder.add_footer("standard rows depend on the basis the eigensolver picks inside the cluster (observations only)")
    table = builder.snapshot()
    writer.table("table1", table)
    return table


TRIANGLE_COLUMNS = (
    "case",
    "eps",
    "lambda_2",
    "lambda_3",
    "gap_fem",
    "mu_2",
    "mu_3",
    "mu_gap",
    "eps_mu_gap",
    "A_2",
    "A_3",
    "designated_mode",
    "A_designated",
    "residual",
)


def run_triangle_study(config: RunConfig, cases: Sequence[TriangleCase] = TRIANGLE_CASES) -> ResultTable:
    """Apex shifts A-D of the equilateral triangle: quotients, gaps and antisymmetry about x = 1/2.

    The weight mode defaults to det; rate weights vanish for the horizontal shears.
    """
    writer = OutputWriter(config.outputs)
    mode = config.weight_mode_or(WeightMode.DET)
    eps = config.domain.eps if isinstance(config.domain, TriangleDomain) else TRIANGLE_EPS
    if eps <= 0.0:
        raise ConfigError("the triangle study needs eps > 0")
    levels = config.mesh.levels
    columns = TRIANGLE_COLUMNS + (("time_s",) if config.outputs.include_timings else ())
    builder = ResultTableBuilder(
        columns,
        header_notes=(f"equilateral triangle, apex shifted by eps; levels={levels}; {_weight_note(mode)}",),
    )

    def run_case(c_idx: int, case: TriangleCase) -> None:
        with tracer.start_as_current_span("driver.triangle.case", attributes={"case": case, "eps": eps}):
            start = time.perf_counter()
            problem = triangle_problem(case, eps, levels)
            result = _stabilize(problem, STUDY_CLUSTER, mode, config)
            elapsed = time.perf_counter() - start

        mu_gap = float(result.quotients[1] - result.quotients[0])
        designated = DESIGNATED_MODE.get(case)
        a2 = _antisymmetry_of(problem, 2, result.functions_on_Kt[0])
        a3 = _antisymmetry_of(problem, 3, result.functions_on_Kt[1])
        row = {
            "case": case,
            "eps": eps,
            "lambda_2": float(result.eigenvalues_t[0]),
            "lambda_3": float(result.eigenvalues_t[1]),
            "gap_fem": gap(result.eigenvalues_t, 1, 2),
            "mu_2": float(result.quotients[0]),
            "mu_3": float(result.quotients[1]),
            "mu_gap": mu_gap,
            "eps_mu_gap": eps * mu_gap,
            "A_2": a2,
            "A_3": a3,
            "designated_mode": designated or 0,
            "A_designated": {2: a2, 3: a3}.get(designated or 0, math.nan),
            "residual": float(result.residuals.max()),
        }
        if config.outputs.include_timings:
            row["time_s"] = elapsed
        builder.add_row(row, order_key=(c_idx,))
        writer.field(
            f"triangle_{case}",
            _mesh_field(
                problem.label,
                result.functions_on_Kt[0].mesh,
                [("u_2", result.functions_on_Kt[0].values), ("u_3", result.functions_on_Kt[1].values)],
            ),
        )
        logger.info("triangle case %s: mu_3 - mu_2 = %.4f", case, mu_gap)

    with concurrent.futures.ThreadPoolExecutor(max_workers=_case_workers(config, len(cases))) as executor:
        futures = [executor.submit(run_case, c_idx, case) for c_idx, case in enumerate(cases)]
        for future in futures:
            future.result()

    builder.add_footer(f"unperturbed lambda_2 = lambda_3 = 112*pi^2/9 = {equilateral_eigenvalue(1, 2):.10e}")
    builder.add_footer(
        "eps_mu_gap is the first-order estimate of gap_fem; with det weights mu_gap is about 75.76 in every case"
    )
    builder.add_footer("designated_mode is the mode antisymmetric about x=1/2 (cases C and D); 0 means none")
    table = builder.snapshot()
    writer.table("triangle", table)
    return table


def run_example1(config: RunConfig) -> ResultTable:
    """Standard FEM, stabilized and analytic modes 2 and 3 on the stretched unit square.

    Uses the configured rectangle (unit square expected) or eps = 1e-4 when the
    domain is not a rectangle.
    """
    writer = OutputWriter(config.outputs)
    domain = config.domain if isinstance(config.domain, RectDomain) else RectDomain(eps=EXAMPLE1_EPS)
    mode = config.weight_mode_or(WeightMode.RATE)
    problem = rect_problem(domain, config.mesh.n, config.mesh.pattern)
    with tracer.start_as_current_span("driver.example1", attributes={"eps": domain.eps}):
        result = _stabilize(problem, STUDY_CLUSTER, mode, config)

    mesh_t = result.functions_on_Kt[0].mesh
    mass = weighted_mass(mesh_t)
    width = domain.width + domain.eps
    analytic = []
    for m, k in ((2, 1), (1, 2)):
        f = FEFunction.interpolate(mesh_t, rectangle_mode(m, k, width, domain.height), dirichlet=True)
        analytic.append(f.with_values(f.values / l2_norm(f, mass)))
    b = SparseSym(mass)
    stiffness = weighted_stiffness(mesh_t)

    builder = ResultTableBuilder(
        ("method", "index", "rayleigh_quotient", "A", "overlap_analytic"),
        header_notes=(f"{problem.label}; {_weight_note(mode)}",),
    )
    methods = (
        ("standard", result.standard_functions),
        ("stabilized", result.functions_on_Kt),
        ("analytic", tuple(analytic)),
    )
    fields: list[tuple[str, FloatArray]] = []
    for m_idx, (method, functions) in enumerate(methods):
        for i, index in enumerate(STUDY_CLUSTER.indices):
            u = functions[i].values
            builder.add_row(
                {
                    "method": method,
                    "index": index,
                    "rayleigh_quotient": float(u @ (stiffness @ u)) / float(u @ (mass @ u)),
                    "A": _antisymmetry_of(problem, index, functions[i]),
                    "overlap_analytic": cross_orthogonality(functions[i], analytic[i], b),
                },
                order_key=(m_idx, i),
            )
            fields.append((f"{method}_u_{index}", functions[i].values))
    writer.field("example1", _mesh_field(problem.label, mesh_t, fields))
    lambda2 = rectangle_eigenvalue(2, 1, width, domain.height)
    lambda3 = rectangle_eigenvalue(1, 2, width, domain.height)
    builder.add_footer(f"analytic eigenvalues: lambda_2={lambda2:.10e}, lambda_3={lambda3:.10e}")
    builder.add_footer("overlap_analytic is |(u, v)| / (|u| |v|) with v the interpolated analytic mode of that index")
    table = builder.snapshot()
    writer.table("example1", table)
    return table
