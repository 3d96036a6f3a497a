"""HTTP API over the engine: ingestion, notebooks, streaming execution, tables.

Action execution streams newline-delimited JSON events (the engine's event
schema verbatim). Results are persisted only at terminal events — a dropped
stream leaves the cell unexecuted rather than half-filled.
"""

from __future__ import annotations

import json
from typing import Iterator, Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel

from . import aggregate as agg
from . import suggestions as sugg
from .config import ApiConfig, Runtime, build_runtime
from .corpus import Collection, create_collection, parse_manifest, resolve_span
from .engine import ActionEngine, ActionSpec, CollectionAnswer, ResultCache, ResultTable
from .errors import (
    CannotCreateSuggestion,
    ForagerError,
    MalformedSource,
    NotFound,
    SpanOutOfRange,
    UnknownCell,
    UnknownDocument,
)
from .index import VectorIndex, build_index
from .notebook import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    ActionCell,
    Notebook,
    action_history,
    create_action_cell,
    create_text_cell,
    edit_result,
    mutate_cell,
    new_notebook,
    notebook_to_dict,
    render_cells,
)

_NOT_FOUND_ERRORS = (NotFound, UnknownDocument, UnknownCell)


class CellCreateBody(BaseModel):
    kind: str
    position: Optional[int] = None
    content: Optional[str] = None
    action_kind: Optional[str] = None
    raw_query: Optional[str] = None
    scope: Optional[list[str]] = None
    dimensions: Optional[str] = None


class NotebookCreateBody(BaseModel):
    collection_id: str
    goal: Optional[str] = None


class EditBody(BaseModel):
    doc_id: str
    column: str
    new_text: Optional[str] = None
    remove: bool = False


class AcceptBody(BaseModel):
    item: str
    kind: Optional[str] = None  # "search" | "question"


class ServiceState:
    """Loaded-object caches on top of the file stores."""

    def __init__(self, runtime: Runtime):
        self.runtime = runtime
        self._collections: dict[str, Collection] = {}
        self._indexes: dict[str, VectorIndex] = {}
        self.cache = ResultCache()

    def collection(self, collection_id: str) -> Collection:
        if collection_id not in self._collections:
            self._collections[collection_id] = self.runtime.collections.load(collection_id)
        return self._collections[collection_id]

    def index(self, collection: Collection) -> VectorIndex:
        if collection.id not in self._indexes:
            self._indexes[collection.id] = self.runtime.indexes.load(
                collection, self.runtime.provider
            )
        return self._indexes[collection.id]

    def register(self, collection: Collection, index: VectorIndex) -> None:
        self._collections[collection.id] = collection
        self._indexes[collection.id] = index

    def find_document(self, doc_id: str):
        for cid in self.runtime.collections.list_ids():
            collection = self.collection(cid)
            try:
                return collection, collection.document(doc_id)
            except UnknownDocument:
                continue
        raise UnknownDocument(f"no document with id {doc_id!r}")

    def find_cell(self, cell_id: str) -> tuple[Notebook, ActionCell]:
        for path in self.runtime.notebooks.root.glob("*.json"):
            notebook = self.runtime.notebooks.load(path.stem)
            for cell in notebook.cells:
                if cell.id == cell_id:
                    if not isinstance(cell, ActionCell):
                        raise ForagerError(f"cell {cell_id} is not executable")
                    return notebook, cell
        raise UnknownCell(f"no cell with id {cell_id!r}")

    def engine_for(self, collection: Collection, goal: str | None = None) -> ActionEngine:
        return ActionEngine(
            collection,
            self.index(collection),
            self.runtime.gateway,
            goal=goal,
            fanout=self.runtime.config.fanout,
            cache=self.cache,
        )


def _collection_summary(collection: Collection) -> dict:
    return {
        "id": collection.id,
        "name": collection.name,
        "goal": collection.goal,
        "documents": [
            {
                "id": d.id,
                "filename": d.filename,
                "chunk_count": len(d.chunks),
                "pages": max((c.page for c in d.chunks if c.page), default=None),
            }
            for d in collection.documents
        ],
    }


def _notebook_payload(notebook: Notebook) -> dict:
    payload = notebook_to_dict(notebook)
    payload["visible_cell_ids"] = [c.id for c in render_cells(notebook)]
    return payload


def _spec_from_body(body: CellCreateBody) -> ActionSpec:
    return ActionSpec(
        kind=body.action_kind or "Search",
        raw_query=body.raw_query or "",
        scope=tuple(body.scope) if body.scope is not None else None,
        dimensions=body.dimensions,
    )


def _auto_suggest(state: ServiceState, notebook_id: str) -> None:
    """Generate follow-up suggestions and insert them unless the notebook moved on."""
    runtime = state.runtime
    notebook = runtime.notebooks.load(notebook_id)
    collection = state.collection(notebook.collection_id)
    marker = notebook.next_seq
    suggestion_set = sugg.generate(
        runtime.gateway, collection, notebook.goal, action_history(notebook)
    )
    if suggestion_set.is_empty():
        return

    def insert(nb: Notebook) -> None:
        if nb.next_seq != marker:  # stale: cells were created since the trigger
            return
        sugg.suggest_into(nb, suggestion_set)

    runtime.notebooks.mutate(notebook_id, insert)


def create_app(config: ApiConfig | None = None, runtime: Runtime | None = None) -> FastAPI:
    runtime = runtime or build_runtime(config or ApiConfig(mock=True))
    state = ServiceState(runtime)
    app = FastAPI(title="docforager", version="0.1.0")
    app.state.runtime = runtime
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(ForagerError)
    async def _forager_handler(request: Request, exc: ForagerError):
        status = 404 if isinstance(exc, _NOT_FOUND_ERRORS) else 400
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.post("/collections", status_code=201)
    async def post_collection(request: Request):
        try:
            manifest = await request.json()
        except json.JSONDecodeError as err:
            raise MalformedSource(f"manifest is not valid JSON: {err}") from None
        name, goal, sources = parse_manifest(manifest)
        collection = create_collection(name or "collection", sources, goal=goal)
        index = build_index(collection, runtime.provider, fanout=runtime.config.fanout)
        runtime.collections.save(collection)
        runtime.indexes.save(index)
        state.register(collection, index)
        return _collection_summary(collection)

    @app.get("/collections")
    def list_collections():
        return [_collection_summary(state.collection(c)) for c in runtime.collections.list_ids()]

    @app.get("/collections/{collection_id}")
    def get_collection(collection_id: str):
        return _collection_summary(state.collection(collection_id))

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str, start: Optional[int] = None, end: Optional[int] = None):
        collection, doc = state.find_document(doc_id)
        span = None
        if start is not None and end is not None:
            text, page = resolve_span(collection, doc_id, start, end)
            span = {"start": start, "end": end, "text": text, "page": page}
        elif start is not None or end is not None:
            raise SpanOutOfRange("start and end must be given together")
        pages: dict[int, dict] = {}
        for chunk in doc.chunks:
            if chunk.page is None:
                continue
            entry = pages.setdefault(
                chunk.page, {"page": chunk.page, "char_start": chunk.char_start, "char_end": chunk.char_end}
            )
            entry["char_start"] = min(entry["char_start"], chunk.char_start)
            entry["char_end"] = max(entry["char_end"], chunk.char_end)
        return {
            "id": doc.id,
            "collection_id": collection.id,
            "filename": doc.filename,
            "full_text": doc.full_text,
            "pages": sorted(pages.values(), key=lambda p: p["page"]) or None,
            "span": span,
        }

    @app.post("/notebooks", status_code=201)
    def post_notebook(body: NotebookCreateBody):
        collection = state.collection(body.collection_id)
        notebook = new_notebook(collection.id, goal=body.goal)
        # Bootstrap suggestions greet a fresh notebook (empty history).
        if runtime.config.auto_suggest:
            suggestion_set = sugg.generate(runtime.gateway, collection, notebook.goal, ([], []))
            if not suggestion_set.is_empty():
                sugg.suggest_into(notebook, suggestion_set)
        runtime.notebooks.save(notebook)
        return _notebook_payload(notebook)

    @app.get("/notebooks/{notebook_id}")
    def get_notebook(notebook_id: str):
        return _notebook_payload(runtime.notebooks.load(notebook_id))

    @app.post("/notebooks/{notebook_id}/cells", status_code=201)
    def post_cell(notebook_id: str, body: CellCreateBody):
        def apply(nb: Notebook) -> str:
            if body.kind == "action":
                return create_action_cell(nb, _spec_from_body(body), body.position).id
            if body.kind == "text":
                return create_text_cell(nb, body.content or "", body.position).id
            if body.kind == "suggestion":
                raise CannotCreateSuggestion("suggestion cells are system-created only")
            raise MalformedSource(f"unknown cell kind {body.kind!r}")

        cell_id = runtime.notebooks.mutate(notebook_id, apply)
        return {"cell_id": cell_id, "notebook": _notebook_payload(runtime.notebooks.load(notebook_id))}

    @app.post("/notebooks/{notebook_id}/cells/{cell_id}/delete")
    def post_delete_cell(notebook_id: str, cell_id: str):
        runtime.notebooks.mutate(notebook_id, lambda nb: mutate_cell(nb, "delete", cell_id=cell_id))
        return _notebook_payload(runtime.notebooks.load(notebook_id))

    @app.post("/cells/{cell_id}/execute")
    def post_execute(cell_id: str):
        notebook, cell = state.find_cell(cell_id)
        collection = state.collection(notebook.collection_id)
        engine = state.engine_for(collection, goal=notebook.goal)
        table = agg.rebuild(notebook, collection)
        existing = agg.existing_columns(table)

        def stream() -> Iterator[bytes]:
            final = None
            error = None
            for event in engine.execute(cell.spec, existing_columns=existing, action_id=cell.id):
                if event.event == "ActionCompleted":
                    final = event.payload["result"]
                elif event.event == "ActionFailed":
                    error = event.payload["error"]
                yield (event.to_json() + "\n").encode("utf-8")

            # Terminal persistence only; a dropped stream leaves the cell untouched.
            def persist(nb: Notebook) -> None:
                target = nb.cell(cell_id)
                if final is not None:
                    if "attributes_used" in final:
                        target.result = CollectionAnswer.from_dict(final)
                    else:
                        target.result = ResultTable.from_dict(final)
                    target.status = STATUS_COMPLETED
                    target.error = None
                else:
                    target.status = STATUS_FAILED
                    target.error = error or "action did not complete"

            runtime.notebooks.mutate(notebook.id, persist)
            if final is not None and runtime.config.auto_suggest:
                _auto_suggest(state, notebook.id)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.post("/notebooks/{notebook_id}/cells/{cell_id}/edit")
    def post_edit(notebook_id: str, cell_id: str, body: EditBody):
        runtime.notebooks.mutate(
            notebook_id,
            lambda nb: edit_result(
                nb, cell_id, body.doc_id, body.column, new_text=body.new_text, remove=body.remove
            ),
        )
        return _notebook_payload(runtime.notebooks.load(notebook_id))

    @app.post("/notebooks/{notebook_id}/suggestions/{cell_id}/accept")
    def post_accept(notebook_id: str, cell_id: str, body: AcceptBody):
        new_id = runtime.notebooks.mutate(
            notebook_id, lambda nb: sugg.accept(nb, cell_id, body.item, body.kind).id
        )
        return {
            "action_cell_id": new_id,
            "notebook": _notebook_payload(runtime.notebooks.load(notebook_id)),
        }

    @app.post("/notebooks/{notebook_id}/suggestions/{cell_id}/dismiss")
    def post_dismiss(notebook_id: str, cell_id: str):
        runtime.notebooks.mutate(notebook_id, lambda nb: sugg.dismiss(nb, cell_id))
        return _notebook_payload(runtime.notebooks.load(notebook_id))

    def _view(notebook_id: str, columns, order):
        notebook = runtime.notebooks.load(notebook_id)
        collection = state.collection(notebook.collection_id)
        table = agg.rebuild(notebook, collection)
        return agg.view(table, columns, order)

    @app.get("/notebooks/{notebook_id}/table.csv")
    def get_table_csv(
        notebook_id: str,
        columns: Optional[list[str]] = Query(None),
        order: Optional[list[str]] = Query(None),
    ):
        data = agg.export_csv(_view(notebook_id, columns, order))
        return Response(content=data, media_type="text/csv; charset=utf-8")

    @app.get("/notebooks/{notebook_id}/table")
    def get_table(
        notebook_id: str,
        columns: Optional[list[str]] = Query(None),
        order: Optional[list[str]] = Query(None),
    ):
        return _view(notebook_id, columns, order).to_dict()

    return app


def serve(config: ApiConfig) -> None:
    """Run the service until interrupted; uvicorn drains in-flight requests."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
