"""Integration test fixtures for eigstab.core."""

import pytest

from eigstab.core.eigensolve import EigenSolverOptions


@pytest.fixture(scope="session")
def solver_options() -> EigenSolverOptions:
    """Solver settings used by the experiment reproductions."""
    return EigenSolverOptions(tol=1e-12, residual_limit=1e-8)
