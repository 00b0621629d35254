"""Unit tests for the eigstab run configuration."""

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from eigstab.cli.config import (
    PolygonDomain,
    RectDomain,
    RunConfig,
    TriangleDomain,
    load_run_config,
)
from eigstab.core.eigensolve import EigenSolverOptions
from eigstab.core.mesh import MeshPattern
from eigstab.core.stabilize import WeightMode
from eigstab.shared.config.config_base import ConfigFileError

CLI_DIR = Path(__file__).parents[2]


def test_defaults() -> None:
    """Without file, environment and overrides every section has its default."""
    config = load_run_config()

    assert isinstance(config.domain, RectDomain)
    assert config.domain.eps == 1e-5
    assert config.mesh.pattern is MeshPattern.LEFT
    assert config.mesh.n == 64
    assert (config.cluster.first, config.cluster.last) == (2, 3)
    assert config.weight_mode is None
    assert config.threads is None
    assert config.outputs.dir == Path("results")
    assert config.log_level == "INFO"


def test_example_yaml() -> None:
    """The shipped YAML example loads."""
    config = load_run_config(CLI_DIR / "example_config.yaml")

    assert isinstance(config.domain, RectDomain)
    assert config.mesh.n == 64
    assert config.weight_mode is WeightMode.RATE
    assert config.otel.endpoint is None


def test_example_triangle_json() -> None:
    """The shipped JSON example selects the triangle study."""
    config = load_run_config(CLI_DIR / "example_triangle_config.json")

    assert isinstance(config.domain, TriangleDomain)
    assert config.domain.case == "C"
    assert config.domain.eps == 1e-6
    assert config.weight_mode is WeightMode.DET
    assert config.outputs.dir == Path("results/triangle")


def test_environment_overrides_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """EIGSTAB_<SECTION>_<FIELD> wins over the file, also for sections the file leaves out."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"domain": {"kind": "rect", "eps": 0.1}, "solver": {"tol": 1e-12}}), encoding="utf-8")
    monkeypatch.setenv("EIGSTAB_SOLVER_TOL", "1e-10")
    monkeypatch.setenv("EIGSTAB_DOMAIN_EPS", "0.2")
    monkeypatch.setenv("EIGSTAB_MESH_N", "16")
    monkeypatch.setenv("EIGSTAB_THREADS", "3")

    config = load_run_config(path)

    assert config.solver.tol == 1e-10
    assert config.domain.eps == 0.2
    assert config.mesh.n == 16
    assert config.threads == 3


def test_environment_reaches_domain_without_file(monkeypatch: pytest.MonkeyPatch) -> None:
    """Domain leaves can be set from the environment alone."""
    monkeypatch.setenv("EIGSTAB_DOMAIN_EPS", "0.05")

    config = load_run_config()

    assert config.domain.kind == "rect"
    assert config.domain.eps == 0.05


def test_overrides_win_over_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Overrides (command-line flags) have the last word."""
    monkeypatch.setenv("EIGSTAB_SOLVER_TOL", "1e-10")

    config = load_run_config(overrides={"solver": {"tol": 1e-9}, "weight_mode": "det"})

    assert config.solver.tol == 1e-9
    assert config.solver.max_iter == 10_000
    assert config.weight_mode is WeightMode.DET


def test_run_config_from_file_layers(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """RunConfig.from_file applies file, environment and overrides in that order."""
    path = tmp_path / "run.yaml"
    path.write_text("domain:\n  eps: 0.1\nmesh:\n  n: 8\n", encoding="utf-8")
    monkeypatch.setenv("EIGSTAB_MESH_N", "16")
    monkeypatch.setenv("EIGSTAB_CLUSTER_LAST", "4")

    config = RunConfig.from_file(path, overrides={"cluster": {"last": 5}})

    assert isinstance(config.domain, RectDomain)
    assert config.domain.eps == 0.1
    assert config.mesh.n == 16
    assert config.cluster.last == 5


def test_empty_prefix_ignores_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """An empty prefix turns environment overrides off."""
    monkeypatch.setenv("EIGSTAB_SOLVER_TOL", "1e-10")

    config = load_run_config(prefix="")

    assert config.solver.tol == 1e-12


def test_domain_kind_defaults_to_rect() -> None:
    """A domain section without kind is a rectangle."""
    config = load_run_config(overrides={"domain": {"eps": 0.1}})

    assert isinstance(config.domain, RectDomain)
    assert config.domain.eps == 0.1


def test_cluster_order_is_checked() -> None:
    """first must not exceed last."""
    with pytest.raises(ValidationError, match="exceeds"):
        load_run_config(overrides={"cluster": {"first": 3, "last": 2}})


def test_polygon_direction_length_is_checked() -> None:
    """A polygon direction needs two entries per vertex."""
    with pytest.raises(ValidationError, match="direction has 2 entries, 8 expected"):
        PolygonDomain(vertices=[(0, 0), (1, 0), (1, 1), (0, 1)], direction=[1.0, 0.0])


def test_polygon_domain_from_document(tmp_path: Path) -> None:
    """Polygon domains are selected by kind and keep their axis."""
    path = tmp_path / "polygon.yaml"
    path.write_text(
        "domain:\n"
        "  kind: polygon\n"
        "  vertices: [[0, 0], [1, 0], [1, 1], [0, 1]]\n"
        "  direction: [0, 1, 1, 0, 0, 0, 0, 0]\n"
        "  eps: 0.01\n"
        "  axis: {kind: horizontal, position: 0.5}\n",
        encoding="utf-8",
    )

    config = load_run_config(path)

    assert isinstance(config.domain, PolygonDomain)
    assert config.domain.vertices[2] == (1.0, 1.0)
    assert config.domain.axis is not None
    assert config.domain.axis.kind == "horizontal"


def test_negative_eps_is_rejected() -> None:
    """Perturbation magnitudes are non-negative."""
    with pytest.raises(ValidationError, match="eps"):
        load_run_config(overrides={"domain": {"eps": -0.1}})


def test_missing_file() -> None:
    """A missing file is a ConfigFileError."""
    with pytest.raises(ConfigFileError, match="not found"):
        load_run_config(Path("does/not/exist.yaml"))


def test_weight_mode_or() -> None:
    """Unset weight modes fall back to the command default."""
    assert RunConfig().weight_mode_or(WeightMode.DET) is WeightMode.DET
    assert RunConfig(weight_mode=WeightMode.RATE).weight_mode_or(WeightMode.DET) is WeightMode.RATE


def test_solver_options() -> None:
    """The solver section maps one to one onto EigenSolverOptions."""
    config = load_run_config(overrides={"solver": {"tol": 1e-10, "dense_threshold": 0, "seed": 7}})

    assert config.solver.options() == EigenSolverOptions(
        tol=1e-10, max_iter=10_000, residual_limit=1e-8, seed=7, dense_threshold=0
    )
