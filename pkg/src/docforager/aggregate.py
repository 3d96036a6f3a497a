"""The Table View: union of all executed query columns, one row per document.

``rebuild`` is a pure function of (notebook, collection): columns appear in
notebook cell order then intra-cell column order, deleted cells are simply
gone, and edits show through because cells are referenced, not copied. Every
collection document gets a row even when some actions were scoped to subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Collection
from .engine import CollectionAnswer, ExistingColumn, ResultCell, ResultTable
from .errors import UnknownColumn
from .notebook import STATUS_COMPLETED, ActionCell, Notebook

FILENAME_HEADER = "filename"


@dataclass(frozen=True)
class AggregateColumn:
    label: str  # de-duplicated display label
    cell_id: str  # originating notebook cell
    source_column: str  # column name inside that cell's result table


@dataclass
class AggregateRow:
    doc_id: str
    filename: str
    cells: list[ResultCell | None]  # parallel to columns; None = out of scope


@dataclass
class AggregateTable:
    columns: list[AggregateColumn] = field(default_factory=list)
    rows: list[AggregateRow] = field(default_factory=list)

    def labels(self) -> list[str]:
        return [c.label for c in self.columns]

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"label": c.label, "cell_id": c.cell_id, "source_column": c.source_column}
                for c in self.columns
            ],
            "rows": [
                {
                    "doc_id": r.doc_id,
                    "filename": r.filename,
                    "cells": [c.to_dict() if c is not None else None for c in r.cells],
                }
                for r in self.rows
            ],
        }


def _dedupe_label(label: str, used: dict[str, int]) -> str:
    count = used.get(label, 0) + 1
    used[label] = count
    return label if count == 1 else f"{label} ({count})"


def rebuild(notebook: Notebook, collection: Collection) -> AggregateTable:
    """Join every executed action's result columns into the overview table."""
    used: dict[str, int] = {FILENAME_HEADER: 1}  # a query named "filename" gets a suffix
    columns: list[AggregateColumn] = []
    sources: list[ResultTable] = []
    for cell in notebook.cells:
        if not isinstance(cell, ActionCell) or cell.status != STATUS_COMPLETED:
            continue
        if cell.result is None:
            continue
        table = (
            cell.result.evidence if isinstance(cell.result, CollectionAnswer) else cell.result
        )
        for name in table.columns:
            columns.append(AggregateColumn(_dedupe_label(name, used), cell.id, name))
            sources.append(table)

    rows = []
    for doc in collection.documents:
        cells: list[ResultCell | None] = []
        for col, table in zip(columns, sources):
            row = table.cells.get(doc.id)
            cells.append(row[table.columns.index(col.source_column)] if row is not None else None)
        rows.append(AggregateRow(doc_id=doc.id, filename=doc.filename, cells=cells))
    return AggregateTable(columns=columns, rows=rows)


def view(
    table: AggregateTable,
    column_filter: list[str] | None = None,
    column_order: list[str] | None = None,
) -> AggregateTable:
    """Non-destructive projection: filter to named columns, then reorder.

    Ordered labels come first (in the given order); remaining filtered columns
    keep their table order. The filename column is implicit and always first.
    """
    labels = table.labels()

    def _positions(names: list[str]) -> list[int]:
        out = []
        for name in names:
            if name not in labels:
                raise UnknownColumn(f"no column {name!r}")
            out.append(labels.index(name))
        return out

    keep = _positions(column_filter) if column_filter is not None else list(range(len(labels)))
    if column_order is not None:
        ordered = [i for i in _positions(column_order) if i in keep]
        if len(ordered) != len(column_order):
            raise UnknownColumn("column_order references a filtered-out column")
        keep = ordered + [i for i in keep if i not in set(ordered)]

    return AggregateTable(
        columns=[table.columns[i] for i in keep],
        rows=[
            AggregateRow(r.doc_id, r.filename, [r.cells[i] for i in keep]) for r in table.rows
        ],
    )


def _csv_field(value: str) -> str:
    if any(ch in value for ch in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def export_csv(table: AggregateTable) -> bytes:
    """UTF-8, comma-delimited, CRLF records, header row of column labels.

    Fields containing comma/quote/newline are double-quoted with internal
    quotes doubled. Cell text only; spans never leave the engine this way.
    """
    lines = [",".join([_csv_field(FILENAME_HEADER)] + [_csv_field(l) for l in table.labels()])]
    for row in table.rows:
        fields = [_csv_field(row.filename)]
        for cell in row.cells:
            fields.append(_csv_field(cell.text if cell is not None else ""))
        lines.append(",".join(fields))
    return ("\r\n".join(lines) + "\r\n").encode("utf-8")


def existing_columns(table: AggregateTable) -> list[ExistingColumn]:
    """Adapt the aggregate schema for attribute-reuse lookups in collection QA."""
    out = []
    for i, col in enumerate(table.columns):
        cells = {row.doc_id: row.cells[i] for row in table.rows if row.cells[i] is not None}
        out.append(ExistingColumn(name=col.label, cells=cells))
    return out
