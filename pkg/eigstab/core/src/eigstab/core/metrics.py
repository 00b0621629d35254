"""Antisymmetry, eigenvalue gaps, difference quotients and orthogonality measures."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from scipy import sparse

from eigstab.core.exceptions import IndexOutOfRangeError, MetricsError, ZeroFunctionError, ZeroPerturbationError
from eigstab.core.fem import FEFunction, SparseSym, evaluate_many, inner, weighted_mass
from eigstab.core.geometry import FloatArray

REFLECTION_TOL = 1e-9


class AxisKind(StrEnum):
    """Orientation of a reflection axis."""

    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


@dataclass(frozen=True)
class ReflectionAxis:
    """The line x = position (vertical) or y = position (horizontal)."""

    kind: AxisKind
    position: float

    @classmethod
    def vertical(cls, x0: float) -> ReflectionAxis:
        """Axis x = x0."""
        return cls(AxisKind.VERTICAL, float(x0))

    @classmethod
    def horizontal(cls, y0: float) -> ReflectionAxis:
        """Axis y = y0."""
        return cls(AxisKind.HORIZONTAL, float(y0))

    def reflect(self, points: FloatArray) -> FloatArray:
        """Mirror points of shape (n, 2) about the axis."""
        out = np.array(points, dtype=np.float64, copy=True)
        col = 0 if self.kind is AxisKind.VERTICAL else 1
        out[:, col] = 2.0 * self.position - out[:, col]
        return out


def l2_norm(u: FEFunction, mass: sparse.spmatrix | None = None) -> float:
    """L2 norm of u with the node-level consistent mass matrix."""
    m = weighted_mass(u.mesh) if mass is None else mass
    return math.sqrt(max(float(u.values @ (m @ u.values)), 0.0))


def antisymmetry(u: FEFunction, axis: ReflectionAxis, tol: float | None = None) -> float:
    """||u + u*|| / ||u|| with u* the nodal interpolant of u composed with the reflection.

    0 means u is antisymmetric about the axis, 2 means it is symmetric.

    Args:
        u: The function.
        axis: Reflection axis; it must cross the bounding box of the mesh.
        tol: Distance by which reflected nodes may fall outside the mesh,
            defaults to 1e-9 times the mesh diameter.

    Raises:
        OutsideDomainError: If a reflected node is farther than tol from the mesh.
        ZeroFunctionError: If u vanishes.
    """
    mesh = u.mesh
    col = 0 if axis.kind is AxisKind.VERTICAL else 1
    lo, hi = mesh.nodes[:, col].min(), mesh.nodes[:, col].max()
    if not lo <= axis.position <= hi:
        raise MetricsError(f"axis {axis.kind}={axis.position} misses the domain [{lo}, {hi}]")

    mass = weighted_mass(mesh)
    norm_u = l2_norm(u, mass)
    if norm_u == 0.0:
        raise ZeroFunctionError("antisymmetry of the zero function")
    tol = REFLECTION_TOL * mesh.diameter if tol is None else tol
    reflected = FEFunction(mesh, evaluate_many(u, axis.reflect(mesh.nodes), tol), dirichlet=False)
    return l2_norm(FEFunction(mesh, u.values + reflected.values, dirichlet=False), mass) / norm_u


def difference_quotient(lambda_t: float, lambda_0: float, t: float) -> float:
    """(lambda_t - lambda_0) / t.

    Raises:
        ZeroPerturbationError: If t is not positive.
    """
    if t <= 0.0:
        raise ZeroPerturbationError(f"difference quotient needs t > 0, got {t}")
    return (lambda_t - lambda_0) / t


def gap(values: Sequence[float] | FloatArray, i: int, j: int) -> float:
    """values_j - values_i for 1-based eigenvalue indices i and j.

    Raises:
        IndexOutOfRangeError: If an index is outside 1..len(values).
    """
    n = len(values)
    for idx in (i, j):
        if not 1 <= idx <= n:
            raise IndexOutOfRangeError(f"eigenvalue index {idx} outside 1..{n}")
    return float(values[j - 1]) - float(values[i - 1])


def cross_orthogonality(u: FEFunction, v: FEFunction, b: SparseSym) -> float:
    """|(u, v)_b| / (||u||_b ||v||_b).

    Raises:
        ZeroFunctionError: If u or v vanishes.
    """
    uu = inner(u, u, b)
    vv = inner(v, v, b)
    if uu <= 0.0 or vv <= 0.0:
        raise ZeroFunctionError("cross orthogonality of a zero function")
    return abs(inner(u, v, b)) / math.sqrt(uu * vv)
