"""Legacy ASCII VTK (version 3.0) serializer for triangle meshes with nodal scalars."""

from __future__ import annotations

from eigstab.shared.report.model import MeshField

VTK_TRIANGLE = 5


def _num(value: float) -> str:
    return f"{value:.17g}"


class VtkLegacySerializer:
    """Render a MeshField as an UNSTRUCTURED_GRID with one SCALARS block per field."""

    def render(self, mesh_field: MeshField) -> str:  # noqa: PLR6301
        """Return the VTK document."""
        points = mesh_field.points
        triangles = mesh_field.triangles
        n_points = points.shape[0]
        n_cells = triangles.shape[0]

        # the title line is limited to 256 characters and must be a single line
        title = " ".join(mesh_field.title.split())[:255] or "eigstab"
        lines = [
            "# vtk DataFile Version 3.0",
            title,
            "ASCII",
            "DATASET UNSTRUCTURED_GRID",
            f"POINTS {n_points} double",
        ]
        lines.extend(f"{_num(x)} {_num(y)} 0" for x, y in points)
        lines.append(f"CELLS {n_cells} {4 * n_cells}")
        lines.extend(f"3 {a} {b} {c}" for a, b, c in triangles)
        lines.append(f"CELL_TYPES {n_cells}")
        lines.extend(str(VTK_TRIANGLE) for _ in range(n_cells))
        if mesh_field.point_data:
            lines.append(f"POINT_DATA {n_points}")
            for name, values in mesh_field.point_data:
                lines.append(f"SCALARS {name} double 1")
                lines.append("LOOKUP_TABLE default")
                lines.extend(_num(v) for v in values)
        return "\n".join(lines) + "\n"
