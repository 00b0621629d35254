"""Shared fixtures for the eigstab.core tests."""

import pytest

from eigstab.core.geometry import MacroTriangulation, PolygonSpec, fan_macro_triangulation

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


@pytest.fixture
def unit_square() -> PolygonSpec:
    """The unit square, counter-clockwise from the origin."""
    return PolygonSpec.from_points(UNIT_SQUARE)


@pytest.fixture
def square_macro(unit_square: PolygonSpec) -> MacroTriangulation:
    """Fan triangulation of the unit square (the layout rect_mesh reports)."""
    return fan_macro_triangulation(unit_square)


@pytest.fixture
def stretch_direction() -> list[float]:
    """Parameter direction moving the right edge of the unit square in +x."""
    return [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
