"""CSV serializer for result tables.

Floats are written in fixed scientific notation, lines end in LF, and notes are
emitted as ``#`` comment lines before the column header and after the last row.
"""

from __future__ import annotations

import csv
import io
import numbers

from eigstab.shared.report.model import Cell, ResultTable

DEFAULT_FLOAT_FORMAT = "%.10e"


class CsvTableSerializer:
    """Render a ResultTable as deterministic CSV text."""

    def __init__(self, float_format: str = DEFAULT_FLOAT_FORMAT) -> None:
        """Use ``float_format`` (printf style) for every real-valued cell."""
        self._float_format = float_format

    def _format_cell(self, value: Cell) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, numbers.Integral):
            return str(int(value))
        if isinstance(value, numbers.Real):
            return self._float_format % float(value)
        return str(value)

    def render(self, table: ResultTable) -> str:
        """Return the CSV document."""
        buffer = io.StringIO()
        for note in table.header_notes:
            buffer.write(f"# {note}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([self._format_cell(v) for v in row])
        for note in table.footer_notes:
            buffer.write(f"# {note}\n")
        return buffer.getvalue()
