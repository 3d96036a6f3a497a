"""Notebook persistence and manipulation: Text, Action, and Suggestion cells.

A notebook records a whole foraging session: the ordered cells, their results
with provenance spans, and enough history for follow-up suggestion prompts.
Mutations go through the store's per-notebook lock (one writer at a time);
readers always see the last committed state.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

from .corpus import _atomic_write
from .engine import (
    ASK_COLLECTION_KIND,
    ASK_EACH_KIND,
    EMPTY_MARKER,
    SEARCH_KIND,
    ActionSpec,
    CollectionAnswer,
    ResultTable,
)
from .errors import (
    CannotCreateSuggestion,
    ForagerError,
    NotFound,
    SchemaVersionMismatch,
    UnknownCell,
    UnknownColumn,
    UnknownRow,
)

NOTEBOOK_SCHEMA_VERSION = 2

STATUS_UNEXECUTED = "unexecuted"
STATUS_RUNNING = "running"
STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"


@dataclass
class SuggestionSet:
    searches: list[str] = field(default_factory=list)
    questions: list[str] = field(default_factory=list)
    created_after_cell: str | None = None  # None = start of notebook

    def is_empty(self) -> bool:
        return not self.searches and not self.questions

    def to_dict(self) -> dict:
        return {
            "searches": list(self.searches),
            "questions": list(self.questions),
            "created_after_cell": self.created_after_cell,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SuggestionSet":
        return cls(
            searches=list(data["searches"]),
            questions=list(data["questions"]),
            created_after_cell=data.get("created_after_cell"),
        )


@dataclass
class TextCell:
    id: str
    content: str = ""
    hidden: bool = False
    created_seq: int = 0
    kind: str = field(default="text", init=False)


@dataclass
class ActionCell:
    id: str
    spec: ActionSpec
    status: str = STATUS_UNEXECUTED
    result: Union[ResultTable, CollectionAnswer, None] = None
    error: str | None = None
    hidden: bool = False
    created_seq: int = 0
    kind: str = field(default="action", init=False)


@dataclass
class SuggestionCell:
    id: str
    suggestions: SuggestionSet
    state: str = "pending"  # pending | accepted | dismissed
    hidden: bool = False
    created_seq: int = 0
    kind: str = field(default="suggestion", init=False)


Cell = Union[TextCell, ActionCell, SuggestionCell]


@dataclass
class Notebook:
    id: str
    collection_id: str
    goal: str | None = None
    cells: list[Cell] = field(default_factory=list)
    next_seq: int = 1
    # Transient optimistic-concurrency counter; not persisted, not compared.
    revision: int = field(default=0, compare=False)

    def cell(self, cell_id: str) -> Cell:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise UnknownCell(f"no cell with id {cell_id!r}")

    def index_of(self, cell_id: str) -> int:
        for i, c in enumerate(self.cells):
            if c.id == cell_id:
                return i
        raise UnknownCell(f"no cell with id {cell_id!r}")

    def touch(self) -> None:
        self.revision += 1


def new_notebook(collection_id: str, goal: str | None = None, notebook_id: str | None = None) -> Notebook:
    return Notebook(id=notebook_id or uuid.uuid4().hex[:12], collection_id=collection_id, goal=goal)


def _new_cell_id() -> str:
    return uuid.uuid4().hex[:12]


def _insert(notebook: Notebook, cell: Cell, position: int | None) -> Cell:
    cell.created_seq = notebook.next_seq
    notebook.next_seq += 1
    if position is None or position >= len(notebook.cells):
        notebook.cells.append(cell)
    else:
        notebook.cells.insert(max(0, position), cell)
    notebook.touch()
    return cell


def create_text_cell(notebook: Notebook, content: str = "", position: int | None = None) -> TextCell:
    return _insert(notebook, TextCell(id=_new_cell_id(), content=content), position)


def create_action_cell(notebook: Notebook, spec: ActionSpec, position: int | None = None) -> ActionCell:
    return _insert(notebook, ActionCell(id=_new_cell_id(), spec=spec), position)


def create_suggestion_cell(
    notebook: Notebook, suggestions: SuggestionSet, position: int | None = None
) -> SuggestionCell:
    """System entry point; user-facing creation paths reject suggestion cells."""
    return _insert(notebook, SuggestionCell(id=_new_cell_id(), suggestions=suggestions), position)


def mutate_cell(notebook: Notebook, command: str, **args) -> Notebook:
    """Apply one of create | delete | hide | duplicate | clear."""
    if command == "create":
        kind = args.get("kind", "text")
        if kind == "text":
            create_text_cell(notebook, args.get("content", ""), args.get("position"))
        elif kind == "action":
            create_action_cell(notebook, args["spec"], args.get("position"))
        elif kind == "suggestion":
            raise CannotCreateSuggestion("suggestion cells are system-created only")
        else:
            raise ValueError(f"unknown cell kind {kind!r}")
        return notebook

    cell = notebook.cell(args["cell_id"])
    if command == "delete":
        notebook.cells.remove(cell)
    elif command == "hide":
        cell.hidden = not cell.hidden
    elif command == "duplicate":
        if isinstance(cell, TextCell):
            copy: Cell = TextCell(id=_new_cell_id(), content=cell.content)
        elif isinstance(cell, ActionCell):
            # Duplicates copy the spec but reset execution.
            copy = ActionCell(id=_new_cell_id(), spec=cell.spec)
        else:
            raise CannotCreateSuggestion("suggestion cells cannot be duplicated")
        position = notebook.index_of(cell.id) + 1
        _insert(notebook, copy, position)
        return notebook
    elif command == "clear":
        if isinstance(cell, TextCell):
            cell.content = ""
        elif isinstance(cell, ActionCell):
            cell.result = None
            cell.error = None
            cell.status = STATUS_UNEXECUTED
        else:
            raise ForagerError("suggestion cells cannot be cleared")
    else:
        raise ValueError(f"unknown command {command!r}")
    notebook.touch()
    return notebook


def render_cells(notebook: Notebook) -> list[Cell]:
    """The user-visible cell list: hidden and dismissed cells are excluded."""
    out = []
    for cell in notebook.cells:
        if cell.hidden:
            continue
        if isinstance(cell, SuggestionCell) and cell.state == "dismissed":
            continue
        out.append(cell)
    return out


def _result_table(cell: ActionCell) -> ResultTable:
    if cell.result is None:
        raise ForagerError(f"cell {cell.id} has no completed results")
    if isinstance(cell.result, CollectionAnswer):
        return cell.result.evidence
    return cell.result


def edit_result(
    notebook: Notebook,
    cell_id: str,
    doc_id: str,
    column: str,
    new_text: str | None = None,
    remove: bool = False,
) -> Notebook:
    """Replace or remove one result value; edited cells drop their spans."""
    cell = notebook.cell(cell_id)
    if not isinstance(cell, ActionCell):
        raise UnknownCell(f"cell {cell_id} is not an action cell")
    table = _result_table(cell)
    if column not in table.columns:
        raise UnknownColumn(f"no column {column!r} in cell {cell_id}")
    if doc_id not in table.cells:
        raise UnknownRow(f"no row for document {doc_id!r} in cell {cell_id}")
    target = table.cells[doc_id][table.columns.index(column)]
    if remove:
        target.text = EMPTY_MARKER
    elif new_text is None:
        raise ValueError("either new_text or remove is required")
    else:
        target.text = new_text
    target.spans = []
    target.edited = True
    notebook.touch()
    return notebook


def action_history(notebook: Notebook) -> tuple[list[str], list[str]]:
    """In-order raw queries of executed Search cells and Ask cells.

    Hidden cells count (hidden is not deleted); unexecuted duplicates do not.
    """
    searches: list[str] = []
    questions: list[str] = []
    for cell in notebook.cells:
        if not isinstance(cell, ActionCell) or cell.status != STATUS_COMPLETED:
            continue
        if cell.spec.kind == SEARCH_KIND:
            searches.append(cell.spec.raw_query)
        elif cell.spec.kind in (ASK_EACH_KIND, ASK_COLLECTION_KIND):
            questions.append(cell.spec.raw_query)
    return searches, questions


# --- serialization ---

def _spec_to_dict(spec: ActionSpec) -> dict:
    return {
        "kind": spec.kind,
        "raw_query": spec.raw_query,
        "scope": list(spec.scope) if spec.scope is not None else None,
        "dimensions": spec.dimensions,
    }


def _spec_from_dict(data: dict) -> ActionSpec:
    scope = data.get("scope")
    return ActionSpec(
        kind=data["kind"],
        raw_query=data.get("raw_query", ""),
        scope=tuple(scope) if scope is not None else None,
        dimensions=data.get("dimensions"),
    )


def _cell_to_dict(cell: Cell) -> dict:
    base = {"id": cell.id, "kind": cell.kind, "hidden": cell.hidden, "created_seq": cell.created_seq}
    if isinstance(cell, TextCell):
        base["content"] = cell.content
    elif isinstance(cell, ActionCell):
        base["spec"] = _spec_to_dict(cell.spec)
        base["status"] = cell.status
        base["error"] = cell.error
        if cell.result is None:
            base["result"] = None
        elif isinstance(cell.result, CollectionAnswer):
            base["result"] = {"type": "collection_answer", **cell.result.to_dict()}
        else:
            base["result"] = {"type": "table", **cell.result.to_dict()}
    else:
        base["suggestions"] = cell.suggestions.to_dict()
        base["state"] = cell.state
    return base


def _cell_from_dict(data: dict) -> Cell:
    kind = data["kind"]
    if kind == "text":
        cell: Cell = TextCell(id=data["id"], content=data.get("content", ""))
    elif kind == "action":
        result_data = data.get("result")
        result: Union[ResultTable, CollectionAnswer, None] = None
        if result_data is not None:
            if result_data.get("type") == "collection_answer":
                result = CollectionAnswer.from_dict(result_data)
            else:
                result = ResultTable.from_dict(result_data)
        cell = ActionCell(
            id=data["id"],
            spec=_spec_from_dict(data["spec"]),
            status=data.get("status", STATUS_UNEXECUTED),
            result=result,
            error=data.get("error"),
        )
    elif kind == "suggestion":
        cell = SuggestionCell(
            id=data["id"],
            suggestions=SuggestionSet.from_dict(data["suggestions"]),
            state=data.get("state", "pending"),
        )
    else:
        raise SchemaVersionMismatch(f"unknown cell kind {kind!r}")
    cell.hidden = data.get("hidden", False)
    cell.created_seq = data.get("created_seq", 0)
    return cell


def notebook_to_dict(notebook: Notebook) -> dict:
    return {
        "schema_version": NOTEBOOK_SCHEMA_VERSION,
        "id": notebook.id,
        "collection_id": notebook.collection_id,
        "goal": notebook.goal,
        "next_seq": notebook.next_seq,
        "cells": [_cell_to_dict(c) for c in notebook.cells],
    }


def _migrate_v1(data: dict) -> dict:
    """v1 stored a boolean ``executed`` on action cells; v2 uses ``status``."""
    for cell in data.get("cells", []):
        if cell.get("kind") == "action" and "status" not in cell:
            executed = bool(cell.pop("executed", False))
            cell["status"] = STATUS_COMPLETED if executed else STATUS_UNEXECUTED
    data["schema_version"] = 2
    return data


_MIGRATIONS: dict[int, Callable[[dict], dict]] = {1: _migrate_v1}


def notebook_from_dict(data: dict) -> Notebook:
    version = data.get("schema_version")
    if not isinstance(version, int) or version > NOTEBOOK_SCHEMA_VERSION or version < 1:
        raise SchemaVersionMismatch(f"notebook schema {version!r} not supported")
    while version < NOTEBOOK_SCHEMA_VERSION:
        data = _MIGRATIONS[version](data)
        version = data["schema_version"]
    return Notebook(
        id=data["id"],
        collection_id=data["collection_id"],
        goal=data.get("goal"),
        cells=[_cell_from_dict(c) for c in data["cells"]],
        next_seq=data.get("next_seq", len(data["cells"]) + 1),
    )


class NotebookStore:
    """One versioned JSON file per notebook; per-notebook serialized writes."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir) / "notebooks"
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, notebook_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(notebook_id, threading.Lock())

    def path(self, notebook_id: str) -> Path:
        return self.root / f"{notebook_id}.json"

    def save(self, notebook: Notebook) -> Path:
        path = self.path(notebook.id)
        _atomic_write(path, json.dumps(notebook_to_dict(notebook), ensure_ascii=False))
        return path

    def load(self, notebook_id: str) -> Notebook:
        path = self.path(notebook_id)
        if not path.exists():
            raise NotFound(f"no notebook with id {notebook_id!r}")
        return notebook_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def mutate(self, notebook_id: str, fn: Callable[[Notebook], object]):
        """Load-mutate-save under the notebook's writer lock; returns fn's result."""
        with self._lock(notebook_id):
            notebook = self.load(notebook_id)
            result = fn(notebook)
            self.save(notebook)
            return result
