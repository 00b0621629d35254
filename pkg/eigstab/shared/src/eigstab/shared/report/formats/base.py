"""Serializer protocols for result tables and mesh fields."""

from __future__ import annotations

from typing import Protocol

from eigstab.shared.report.model import MeshField, ResultTable


class TableSerializer(Protocol):
    """Serialize a result table to a string in a specific format."""

    def render(self, table: ResultTable) -> str:
        """Return the serialized table document."""
        raise NotImplementedError


class MeshFieldSerializer(Protocol):
    """Serialize a mesh with nodal fields to a string in a specific format."""

    def render(self, mesh_field: MeshField) -> str:
        """Return the serialized mesh document."""
        raise NotImplementedError
