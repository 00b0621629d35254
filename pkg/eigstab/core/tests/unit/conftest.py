"""Unit test fixtures for eigstab.core."""

import numpy as np
import pytest

from eigstab.core.mesh import MeshPattern, TriMesh, rect_mesh


@pytest.fixture
def rng() -> np.random.Generator:
    """A seeded generator for tests that need a few random numbers."""
    return np.random.default_rng(20240501)


@pytest.fixture
def crossed_8() -> TriMesh:
    """Crossed mesh of the unit square with 8 cells per side."""
    return rect_mesh(8, pattern=MeshPattern.CROSSED)


@pytest.fixture
def left_8() -> TriMesh:
    """Left mesh of the unit square with 8 cells per side."""
    return rect_mesh(8, pattern=MeshPattern.LEFT)
