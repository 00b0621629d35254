"""Format-neutral result tables and mesh fields, plus a thread-safe table accumulator."""

from __future__ import annotations

import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

type Cell = str | int | float


@dataclass(frozen=True)
class ResultTable:
    """Immutable table with fixed column order and optional comment lines."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...] = ()
    header_notes: tuple[str, ...] = ()
    footer_notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Reject rows that do not match the column layout."""
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")

    def column(self, name: str) -> tuple[Cell, ...]:
        """Return all values of one column."""
        idx = self.columns.index(name)
        return tuple(row[idx] for row in self.rows)


@dataclass(order=True)
class _PendingRow:
    order_key: tuple[Cell, ...]
    cells: tuple[Cell, ...] = field(compare=False)


class ResultTableBuilder:
    """Mutable accumulator for rows produced by (possibly concurrent) driver cases.

    Rows carry an ordering key; ``snapshot`` sorts by it so the rendered table does
    not depend on the order in which worker threads finished.
    """

    def __init__(self, columns: Sequence[str], *, header_notes: Sequence[str] = ()) -> None:
        """Open an empty table with the given column layout."""
        self._columns = tuple(columns)
        self._header_notes = list(header_notes)
        self._footer_notes: list[str] = []
        self._rows: list[_PendingRow] = []
        self._lock = threading.Lock()

    @property
    def columns(self) -> tuple[str, ...]:
        """Column names in output order."""
        return self._columns

    def add_row(self, values: Mapping[str, Cell], *, order_key: Sequence[Cell] = ()) -> None:
        """Add one row given as a column-name mapping; every column must be present."""
        missing = [c for c in self._columns if c not in values]
        if missing:
            raise ValueError(f"row is missing columns: {', '.join(missing)}")
        extra = sorted(set(values) - set(self._columns))
        if extra:
            raise ValueError(f"row has unknown columns: {', '.join(extra)}")
        cells = tuple(values[c] for c in self._columns)
        with self._lock:
            key = tuple(order_key) if order_key else (len(self._rows),)
            self._rows.append(_PendingRow(order_key=key, cells=cells))

    def add_footer(self, note: str) -> None:
        """Append a trailing comment line."""
        with self._lock:
            self._footer_notes.append(note)

    def snapshot(self) -> ResultTable:
        """Return an immutable view with rows sorted by their ordering key."""
        with self._lock:
            rows = tuple(r.cells for r in sorted(self._rows))
            return ResultTable(
                columns=self._columns,
                rows=rows,
                header_notes=tuple(self._header_notes),
                footer_notes=tuple(self._footer_notes),
            )


@dataclass(frozen=True)
class MeshField:
    """Triangle mesh with named nodal fields, ready for export."""

    title: str
    points: npt.NDArray[np.float64]
    triangles: npt.NDArray[np.int64]
    point_data: tuple[tuple[str, npt.NDArray[np.float64]], ...] = ()

    def __post_init__(self) -> None:
        """Check array shapes against each other."""
        if self.points.ndim != 2 or self.points.shape[1] != 2:  # noqa: PLR2004
            raise ValueError("points must have shape (n, 2)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:  # noqa: PLR2004
            raise ValueError("triangles must have shape (m, 3)")
        for name, values in self.point_data:
            if values.shape != (self.points.shape[0],):
                raise ValueError(f"field {name!r} has {values.shape} values for {self.points.shape[0]} points")
            if any(ch.isspace() for ch in name):
                raise ValueError(f"field name {name!r} must not contain whitespace")
