"""eigstab run configuration."""

import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Annotated, Any, ClassVar, Literal, Self

from pydantic import BaseModel, Field, model_validator

from eigstab.core.eigensolve import EigenSolverOptions
from eigstab.core.mesh import MeshPattern
from eigstab.core.stabilize import WeightMode
from eigstab.shared.config.config_base import ENV_PREFIX, ConfigBase

logger = logging.getLogger(__name__)

TriangleCase = Literal["A", "B", "C", "D"]


class ConfigError(RuntimeError):
    """A run configuration is inconsistent with the requested command."""


class RectDomain(BaseModel):
    """(0, width) x (0, height) with its right edge moved by eps."""

    kind: Literal["rect"] = "rect"
    eps: Annotated[float, Field(description="Displacement of the right edge", ge=0.0)] = 1e-5
    width: Annotated[float, Field(description="Unperturbed width", gt=0.0)] = 1.0
    height: Annotated[float, Field(description="Height", gt=0.0)] = 1.0


class TriangleDomain(BaseModel):
    """Equilateral triangle (0,0), (1,0), (1/2, sqrt(3)/2) with its apex shifted by eps."""

    kind: Literal["triangle"] = "triangle"
    case: Annotated[
        TriangleCase,
        Field(description="Apex shift: A right, B left, C up, D down"),
    ] = "C"
    eps: Annotated[float, Field(description="Apex displacement", ge=0.0)] = 1e-6


class AxisConfig(BaseModel):
    """A reflection axis for antisymmetry reporting."""

    kind: Literal["vertical", "horizontal"]
    position: float


class PolygonDomain(BaseModel):
    """A convex polygon moved along an arbitrary parameter direction."""

    kind: Literal["polygon"] = "polygon"
    vertices: Annotated[
        list[tuple[float, float]],
        Field(description="Counter-clockwise vertex coordinates", min_length=3),
    ]
    direction: Annotated[
        list[float],
        Field(description="Direction e = (dx_1..dx_k, dy_1..dy_k) in parameter space"),
    ]
    eps: Annotated[float, Field(description="Magnitude t of the perturbation", ge=0.0)] = 1e-5
    centered_fan: Annotated[
        bool,
        Field(description="Fan-triangulate from the vertex average instead of vertex 0"),
    ] = False
    axis: Annotated[AxisConfig | None, Field(description="Optional axis for antisymmetry measures")] = None

    @model_validator(mode="after")
    def validate_direction_length(self) -> Self:
        """The direction needs two entries per vertex."""
        if len(self.direction) != 2 * len(self.vertices):
            msg = f"direction has {len(self.direction)} entries, {2 * len(self.vertices)} expected"
            logger.error(msg)
            raise ValueError(msg)
        return self


class MeshConfig(BaseModel):
    """Mesh resolution."""

    pattern: Annotated[MeshPattern, Field(description="Diagonal layout of rectangle meshes")] = MeshPattern.LEFT
    n: Annotated[int, Field(description="Cells per rectangle side", ge=1)] = 64
    levels: Annotated[int, Field(description="Uniform refinements of each macro triangle", ge=1)] = 6


class ClusterConfig(BaseModel):
    """1-based indices of the eigenvalue cluster."""

    first: Annotated[int, Field(ge=1)] = 2
    last: Annotated[int, Field(ge=1)] = 3

    @model_validator(mode="after")
    def validate_order(self) -> Self:
        """first must not exceed last."""
        if self.first > self.last:
            msg = f"cluster.first ({self.first}) exceeds cluster.last ({self.last})"
            logger.error(msg)
            raise ValueError(msg)
        return self


class SolverConfig(BaseModel):
    """Eigensolver settings."""

    tol: Annotated[float, Field(description="Relative tolerance of the iterative solver", ge=0.0, lt=1.0)] = 1e-12
    max_iter: Annotated[int, Field(description="Iteration cap", ge=1)] = 10_000
    residual_limit: Annotated[float, Field(description="Largest accepted relative residual", gt=0.0)] = 1e-8
    seed: Annotated[int, Field(description="Seed of the start vector")] = 0
    dense_threshold: Annotated[int, Field(description="Solve densely up to this dimension", ge=0)] = 1500

    def options(self) -> EigenSolverOptions:
        """Solver options for eigstab.core."""
        return EigenSolverOptions(
            tol=self.tol,
            max_iter=self.max_iter,
            residual_limit=self.residual_limit,
            seed=self.seed,
            dense_threshold=self.dense_threshold,
        )


class OutputConfig(BaseModel):
    """Where and what to write."""

    dir: Annotated[Path, Field(description="Output directory")] = Path("results")
    emit_vtk: Annotated[bool, Field(description="Write VTK files of eigenfunctions")] = True
    emit_csv: Annotated[bool, Field(description="Write CSV tables")] = True
    include_timings: Annotated[
        bool,
        Field(description="Add wall-clock columns (makes CSV output run-dependent)"),
    ] = False


Domain = Annotated[RectDomain | TriangleDomain | PolygonDomain, Field(discriminator="kind")]


class RunConfig(ConfigBase):
    """Configuration of an eigstab run."""

    env_sections: ClassVar[tuple[str, ...]] = ("domain", "mesh", "cluster", "solver", "outputs", "otel")

    domain: Annotated[Domain, Field(description="Domain and perturbation")] = RectDomain()
    mesh: Annotated[MeshConfig, Field(description="Mesh resolution")] = MeshConfig()
    cluster: Annotated[ClusterConfig, Field(description="Eigenvalue cluster")] = ClusterConfig()
    solver: Annotated[SolverConfig, Field(description="Eigensolver settings")] = SolverConfig()
    weight_mode: Annotated[
        WeightMode | None,
        Field(description="Weight of the right-hand form (rate or det); unset picks the command default"),
    ] = None
    outputs: Annotated[OutputConfig, Field(description="Output settings")] = OutputConfig()
    threads: Annotated[
        int | None,
        Field(description="Upper bound of parallel eigensolves (EIGSTAB_THREADS)", ge=1),
    ] = None

    @model_validator(mode="before")
    @classmethod
    def default_domain_kind(cls, data: Any) -> Any:
        """A domain section without kind is a rectangle."""
        if isinstance(data, dict) and isinstance(data.get("domain"), dict):
            return {**data, "domain": {"kind": "rect", **data["domain"]}}
        return data

    def weight_mode_or(self, default: WeightMode) -> WeightMode:
        """The configured weight mode, or the command default when unset."""
        return default if self.weight_mode is None else self.weight_mode


def load_run_config(
    path: Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    prefix: str = ENV_PREFIX,
) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, the environment and overrides (in that order).

    Args:
        path: JSON or YAML document, optional.
        overrides: Nested values that win over file and environment, e.g. from CLI flags.
        prefix: Environment prefix, empty to ignore the environment.

    Raises:
        ConfigFileError: If the file is missing or unparsable.
        pydantic.ValidationError: If a value is out of range; the message names the field path.
    """
    if path is None:
        config = RunConfig.from_data({}, prefix, overrides)
    else:
        config = RunConfig.from_file(path, prefix, overrides)
    logger.debug("run configuration: %s", config.model_dump_json())
    return config
