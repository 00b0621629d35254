"""Closed-form Dirichlet spectra of rectangles and the equilateral triangle."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from eigstab.core.geometry import FloatArray
from eigstab.core.stabilize import WeightMode

PI2 = math.pi**2


def rectangle_eigenvalue(m: int, n: int, width: float = 1.0, height: float = 1.0) -> float:
    """pi^2 (m^2 / width^2 + n^2 / height^2)."""
    return PI2 * (m**2 / width**2 + n**2 / height**2)


def rectangle_mode(
    m: int, n: int, width: float = 1.0, height: float = 1.0
) -> Callable[[FloatArray, FloatArray], FloatArray]:
    """The eigenfunction sin(m pi x / width) sin(n pi y / height), vectorized."""

    def mode(x: FloatArray, y: FloatArray) -> FloatArray:
        return np.sin(m * math.pi * x / width) * np.sin(n * math.pi * y / height)

    return mode


def equilateral_eigenvalue(m: int, n: int, side: float = 1.0) -> float:
    """(16 pi^2 / (9 side^2)) (m^2 + m n + n^2) for the equilateral triangle."""
    return 16.0 * PI2 / (9.0 * side**2) * (m * m + m * n + n * n)


def stretch_gaps(eps: float) -> tuple[float, float]:
    """Gap lambda_3 - lambda_2 of (0, 1+eps) x (0, 1).

    Returns:
        The separable-spectrum gap 3 pi^2 (1 - (1+eps)^-2) and the value
        4 pi^2 (1 - (1+eps)^-2) used as the reference gap of the stretched square.
    """
    shrink = 1.0 - (1.0 + eps) ** -2
    return 3.0 * PI2 * shrink, 4.0 * PI2 * shrink


def stretch_quotients(eps: float, weight_mode: WeightMode = WeightMode.RATE) -> tuple[float, float]:
    """Continuum quotients (mu_2, mu_3) of the stretch of the unit square by eps in x."""
    mu2 = -4.0 * PI2 * (2.0 + eps) / (1.0 + eps)
    mu3 = -PI2 * (2.0 + eps) / (1.0 + eps)
    if WeightMode(weight_mode) is WeightMode.DET:
        return mu2 / (1.0 + eps), mu3 / (1.0 + eps)
    return mu2, mu3
