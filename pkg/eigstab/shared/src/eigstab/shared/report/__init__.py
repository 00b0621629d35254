"""Result tables, mesh fields and their serializers."""

from eigstab.shared.report.formats import CsvTableSerializer, MeshFieldSerializer, TableSerializer, VtkLegacySerializer
from eigstab.shared.report.model import Cell, MeshField, ResultTable, ResultTableBuilder

__all__ = [
    "Cell",
    "CsvTableSerializer",
    "MeshField",
    "MeshFieldSerializer",
    "ResultTable",
    "ResultTableBuilder",
    "TableSerializer",
    "VtkLegacySerializer",
]
