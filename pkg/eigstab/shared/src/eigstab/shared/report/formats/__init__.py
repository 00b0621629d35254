"""Result serializers."""

from eigstab.shared.report.formats.base import MeshFieldSerializer, TableSerializer
from eigstab.shared.report.formats.csv_table import CsvTableSerializer
from eigstab.shared.report.formats.vtk_legacy import VtkLegacySerializer

__all__ = [
    "CsvTableSerializer",
    "MeshFieldSerializer",
    "TableSerializer",
    "VtkLegacySerializer",
]
