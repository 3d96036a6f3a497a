"""Action execution: query parsing, the four actions, provenance, row streaming.

The four actions share one pipeline shape: resolve the document scope, fan out
per-document work onto a bounded thread pool, emit a RowCompleted event as each
document finishes (arrival order), and assemble the final table in collection
order so results are deterministic regardless of completion order.

Provenance contract: an ``extracted`` cell's spans resolve, after whitespace
normalization, to exactly its snippet texts. This is enforced when the cell is
built, not trusted downstream. Snippets the model returns that cannot be
aligned to the document demote the cell to ``generated`` and flag it.
"""

from __future__ import annotations

import itertools
import json
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Iterator

from . import gateway as gw
from .corpus import Collection, Document, resolve_span
from .errors import ActionFailed, EmptyQuery, InvalidScope, UnparseableResponse
from .index import VectorIndex, lexical_find, semantic_topk

DEFAULT_FANOUT = 8
MAX_SNIPPETS = 3
SNIPPET_SEPARATOR = " … "
EMPTY_MARKER = "— not found —"

SEARCH_KIND = "Search"
ASK_EACH_KIND = "AskEach"
ASK_COLLECTION_KIND = "AskCollection"
SUMMARIZE_KIND = "Summarize"
ACTION_KINDS = (SEARCH_KIND, ASK_EACH_KIND, ASK_COLLECTION_KIND, SUMMARIZE_KIND)


@dataclass(frozen=True)
class ActionSpec:
    kind: str
    raw_query: str = ""
    scope: tuple[str, ...] | None = None  # None = all documents
    dimensions: str | None = None  # Summarize only

    def fingerprint(self) -> str:
        return json.dumps(
            [self.kind, self.raw_query, list(self.scope or []), self.dimensions]
        )


@dataclass(frozen=True)
class QueryPart:
    text: str
    mode: str  # "lexical" | "semantic"


@dataclass
class ParsedQuery:
    parts: list[QueryPart]


def _split_top_level_commas(raw: str) -> list[str]:
    parts: list[str] = []
    buf: list[str] = []
    in_quotes = False
    for ch in raw:
        if ch == '"':
            in_quotes = not in_quotes
            buf.append(ch)
        elif ch == "," and not in_quotes:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def parse_query(raw: str) -> ParsedQuery:
    """Split on top-level commas; a fully quoted part is lexical, else semantic."""
    if not raw or not raw.strip():
        raise EmptyQuery("query is empty")
    parts: list[QueryPart] = []
    for piece in _split_top_level_commas(raw):
        text = piece.strip()
        if not text:
            continue
        if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
            inner = text[1:-1].strip()
            if inner:
                parts.append(QueryPart(inner, "lexical"))
        else:
            parts.append(QueryPart(text, "semantic"))
    if not parts:
        raise EmptyQuery(f"no usable parts in query {raw!r}")
    return ParsedQuery(parts=parts)


@dataclass
class ResultCell:
    text: str
    spans: list[tuple[int, int]] = field(default_factory=list)
    origin: str = "generated"  # extracted | generated | error
    edited: bool = False
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "spans": [list(s) for s in self.spans],
            "origin": self.origin,
            "edited": self.edited,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultCell":
        return cls(
            text=data["text"],
            spans=[tuple(s) for s in data["spans"]],
            origin=data["origin"],
            edited=data["edited"],
            flags=list(data.get("flags", [])),
        )


@dataclass
class ResultTable:
    columns: list[str]
    doc_ids: list[str]  # scoped documents, collection order
    cells: dict[str, list[ResultCell]]  # doc_id -> one cell per column

    def cell(self, doc_id: str, column: str) -> ResultCell:
        return self.cells[doc_id][self.columns.index(column)]

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "doc_ids": list(self.doc_ids),
            "cells": {d: [c.to_dict() for c in row] for d, row in self.cells.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultTable":
        return cls(
            columns=list(data["columns"]),
            doc_ids=list(data["doc_ids"]),
            cells={
                d: [ResultCell.from_dict(c) for c in row] for d, row in data["cells"].items()
            },
        )


@dataclass(frozen=True)
class AttributeUse:
    name: str
    reused: bool


@dataclass
class CollectionAnswer:
    answer: str
    evidence: ResultTable
    attributes_used: list[AttributeUse]

    def to_dict(self) -> dict:
        return {
            "answer": self.answer,
            "evidence": self.evidence.to_dict(),
            "attributes_used": [
                {"name": a.name, "reused": a.reused} for a in self.attributes_used
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CollectionAnswer":
        return cls(
            answer=data["answer"],
            evidence=ResultTable.from_dict(data["evidence"]),
            attributes_used=[
                AttributeUse(a["name"], a["reused"]) for a in data["attributes_used"]
            ],
        )


@dataclass
class ExistingColumn:
    """A previously executed query column offered for attribute reuse."""

    name: str
    cells: dict[str, ResultCell]  # doc_id -> cell


@dataclass(frozen=True)
class ActionEvent:
    event: str  # ActionStarted | RowCompleted | PhaseChanged | ActionCompleted | ActionFailed
    action_id: str
    seq: int
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "event": self.event,
                "action_id": self.action_id,
                "seq": self.seq,
                "payload": self.payload,
            },
            ensure_ascii=False,
        )


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def normalize_label(text: str) -> str:
    return normalize_ws(text).casefold()


def _norm_map(text: str) -> tuple[str, list[int]]:
    """Whitespace-collapsed text plus a map from collapsed to original offsets."""
    chars: list[str] = []
    mapping: list[int] = []
    pending_ws = False
    for i, ch in enumerate(text):
        if ch.isspace():
            pending_ws = bool(chars)
            continue
        if pending_ws:
            chars.append(" ")
            mapping.append(i - 1)
            pending_ws = False
        chars.append(ch)
        mapping.append(i)
    return "".join(chars), mapping


class SnippetAligner:
    """Maps model-returned snippet text back to exact document spans."""

    def __init__(self, document: Document):
        self.document = document
        self._doc_norm, self._doc_map = _norm_map(document.full_text)

    def align(self, snippet: str, region_chunks=None) -> tuple[int, int] | None:
        """Whitespace-normalized exact match, retrieved chunks first, then whole text."""
        target = normalize_ws(snippet)
        if not target:
            return None
        for chunk in region_chunks or ():
            norm, mapping = _norm_map(chunk.text)
            pos = norm.find(target)
            if pos != -1:
                return (
                    chunk.char_start + mapping[pos],
                    chunk.char_start + mapping[pos + len(target) - 1] + 1,
                )
        pos = self._doc_norm.find(target)
        if pos != -1:
            return (self._doc_map[pos], self._doc_map[pos + len(target) - 1] + 1)
        return None


class ResultCache:
    """In-memory action-result cache keyed by (provider, index hash, action)."""

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str, str], ResultTable | CollectionAnswer] = {}

    def _key(self, index: VectorIndex, spec: ActionSpec) -> tuple[str, str, str]:
        return (index.provider_id, index.content_hash, spec.fingerprint())

    def get(self, index: VectorIndex, spec: ActionSpec):
        return self._entries.get(self._key(index, spec))

    def put(self, index: VectorIndex, spec: ActionSpec, result) -> None:
        self._entries[self._key(index, spec)] = result


class ActionEngine:
    """Executes actions over one immutable (collection, index) pair."""

    def __init__(
        self,
        collection: Collection,
        index: VectorIndex,
        gateway: gw.LlmGateway,
        *,
        goal: str | None = None,
        fanout: int = DEFAULT_FANOUT,
        top_k: int = 30,
        max_snippets: int = MAX_SNIPPETS,
        cache: ResultCache | None = None,
    ):
        self.collection = collection
        self.index = index
        self.gateway = gateway
        # The session goal steers attribute detection; default to the
        # collection-level goal when no notebook goal was given.
        self.goal = goal if goal is not None else collection.goal
        self.fanout = fanout
        self.top_k = top_k
        self.max_snippets = max_snippets
        self.cache = cache
        self._aligners: dict[str, SnippetAligner] = {}

    # --- helpers ---

    def _aligner(self, doc: Document) -> SnippetAligner:
        aligner = self._aligners.get(doc.id)
        if aligner is None:
            aligner = SnippetAligner(doc)
            self._aligners[doc.id] = aligner
        return aligner

    def _resolve_scope(self, spec: ActionSpec) -> list[Document]:
        if spec.scope is None:
            return list(self.collection.documents)
        if not spec.scope:
            raise InvalidScope("explicit scope is empty")
        known = set(self.collection.doc_ids())
        bad = [d for d in spec.scope if d not in known]
        if bad:
            raise InvalidScope(f"scope ids not in collection: {bad}")
        wanted = set(spec.scope)
        return [d for d in self.collection.documents if d.id in wanted]

    def _complete_json(self, kind: str, role: str, prompt: str, parser: Callable):
        """Complete and parse, with one re-ask repair on unparseable output."""
        response = self.gateway.complete(gw.action_request(kind, role, prompt))
        try:
            return parser(response.text)
        except UnparseableResponse:
            repair = f"{prompt}\n\n{gw.REPAIR_INSTRUCTION}"
            response = self.gateway.complete(gw.action_request(kind, role, repair))
            return parser(response.text)

    def _extracted_cell(self, doc: Document, snippets_with_spans) -> ResultCell:
        """Build an extracted cell, verifying the verbatim contract per span."""
        texts = []
        spans = []
        flags: list[str] = []
        unaligned = False
        for snippet, span in snippets_with_spans:
            texts.append(snippet)
            if span is None:
                unaligned = True
                continue
            resolved, _ = resolve_span(self.collection, doc.id, span[0], span[1])
            if normalize_ws(resolved) != normalize_ws(snippet):
                raise AssertionError(
                    f"provenance violation in {doc.filename}: span {span} resolves to "
                    f"{resolved!r}, not {snippet!r}"
                )
            spans.append(span)
        if unaligned:
            flags.append("unaligned_snippet")
        return ResultCell(
            text=SNIPPET_SEPARATOR.join(texts),
            spans=spans,
            origin="generated" if unaligned else "extracted",
            flags=flags,
        )

    @staticmethod
    def _empty_cell() -> ResultCell:
        return ResultCell(text=EMPTY_MARKER, spans=[], origin="extracted")

    @staticmethod
    def _error_cell(err: Exception) -> ResultCell:
        return ResultCell(text=f"error: {err}", spans=[], origin="error")

    # --- per-document cell builders ---

    def _lexical_cell(self, doc: Document, query: str) -> ResultCell:
        matches = lexical_find(doc, query)
        seen: set[int] = set()
        chunks = []
        for chunk, _, _ in matches:
            if chunk.index not in seen:
                seen.add(chunk.index)
                chunks.append(chunk)
            if len(chunks) == self.max_snippets:
                break
        if not chunks:
            return self._empty_cell()
        return self._extracted_cell(
            doc, [(c.text, (c.char_start, c.char_end)) for c in chunks]
        )

    def _retrieve(self, doc: Document, query: str):
        hits = semantic_topk(self.index, doc.id, query, k=self.top_k)
        return sorted(hits, key=lambda h: h.chunk.index)

    def _semantic_cell(self, doc: Document, query: str) -> ResultCell:
        hits = self._retrieve(doc, query)
        context = "\n".join(h.chunk.text for h in hits)
        prompt = gw.render_prompt("search", {"Context": context, "Query": query})
        snippets = self._complete_json("search", "fast", prompt, gw.parse_snippets)
        snippets = [s for s in (s.strip() for s in snippets) if s][: self.max_snippets]
        if not snippets:
            return self._empty_cell()
        aligner = self._aligner(doc)
        region = [h.chunk for h in hits]
        return self._extracted_cell(
            doc, [(s, aligner.align(s, region)) for s in snippets]
        )

    def _generated_cell(self, doc: Document, question: str, context_chunks) -> ResultCell:
        context = "\n".join(c.text for c in context_chunks)
        prompt = gw.render_prompt(
            "ask_doc",
            {"Examples": gw.ask_doc_examples(), "Context": context, "Question": question},
        )
        response = self.gateway.complete(gw.action_request("ask_doc", "fast", prompt))
        # Spans of the context chunks give the cell its context-linking entry points.
        return ResultCell(
            text=response.text.strip(),
            spans=[(c.char_start, c.char_end) for c in context_chunks],
            origin="generated",
        )

    def _ask_cell(self, doc: Document, question: str) -> ResultCell:
        hits = self._retrieve(doc, question)
        return self._generated_cell(doc, question, [h.chunk for h in hits])

    def _summary_cell(self, doc: Document, dimensions: str | None) -> ResultCell:
        if dimensions:
            chunks = [h.chunk for h in self._retrieve(doc, dimensions)]
            question = (
                f"Provide a short summary of this document, with a specific focus on {dimensions}."
            )
        else:
            chunks = list(doc.chunks[: self.top_k])
            question = "Provide a short summary of this document."
        return self._generated_cell(doc, question, chunks)

    # --- execution ---

    def execute(
        self,
        spec: ActionSpec,
        existing_columns: list[ExistingColumn] | None = None,
        action_id: str | None = None,
    ) -> Iterator[ActionEvent]:
        """Run an action, yielding the ordered event stream."""
        action_id = action_id or uuid.uuid4().hex[:12]
        seq = itertools.count(1)

        def ev(event: str, payload: dict) -> ActionEvent:
            return ActionEvent(event, action_id, next(seq), payload)

        try:
            if spec.kind not in ACTION_KINDS:
                raise ActionFailed(f"unknown action kind {spec.kind!r}")
            docs = self._resolve_scope(spec)
            if self.cache is not None:
                cached = self.cache.get(self.index, spec)
                if cached is not None:
                    yield from self._replay(ev, spec, cached)
                    return
            if spec.kind == ASK_COLLECTION_KIND:
                yield from self._execute_collection(ev, spec, docs, existing_columns or [])
            else:
                yield from self._execute_per_document(ev, spec, docs)
        except ActionFailed as err:
            yield ev("ActionFailed", {"error": str(err)})
        except Exception as err:  # surfaced, never swallowed silently
            yield ev("ActionFailed", {"error": f"{type(err).__name__}: {err}"})

    def _replay(self, ev, spec: ActionSpec, cached) -> Iterator[ActionEvent]:
        if isinstance(cached, CollectionAnswer):
            yield ev("ActionStarted", {"kind": spec.kind, "columns": cached.evidence.columns})
            yield ev("ActionCompleted", {"answer": cached.answer, "result": cached.to_dict(), "cached": True})
        else:
            yield ev("ActionStarted", {"kind": spec.kind, "columns": cached.columns})
            for doc_id in cached.doc_ids:
                cells = [c.to_dict() for c in cached.cells[doc_id]]
                yield ev("RowCompleted", {"doc_id": doc_id, "cells": cells})
            yield ev("ActionCompleted", {"result": cached.to_dict(), "cached": True})

    def _row_builder(self, spec: ActionSpec) -> tuple[list[str], Callable[[Document], list[ResultCell]]]:
        if spec.kind == SEARCH_KIND:
            parsed = parse_query(spec.raw_query)
            columns = [p.text for p in parsed.parts]

            def build(doc: Document) -> list[ResultCell]:
                cells = []
                for part in parsed.parts:
                    try:
                        if part.mode == "lexical":
                            cells.append(self._lexical_cell(doc, part.text))
                        else:
                            cells.append(self._semantic_cell(doc, part.text))
                    except Exception as err:
                        cells.append(self._error_cell(err))
                return cells

            return columns, build

        if spec.kind == ASK_EACH_KIND:
            question = spec.raw_query.strip()
            if not question:
                raise EmptyQuery("ask requires a question")

            def build(doc: Document) -> list[ResultCell]:
                try:
                    return [self._ask_cell(doc, question)]
                except Exception as err:
                    return [self._error_cell(err)]

            return [question], build

        # Summarize: empty query means a general summary.
        dimensions = spec.dimensions or (spec.raw_query.strip() or None)
        label = f"Summary ({dimensions})" if dimensions else "Summary"

        def build(doc: Document) -> list[ResultCell]:
            try:
                return [self._summary_cell(doc, dimensions)]
            except Exception as err:
                return [self._error_cell(err)]

        return [label], build

    def _parallel_rows(self, docs: list[Document], build) -> Iterator[tuple[str, list[ResultCell]]]:
        workers = max(1, min(self.fanout, len(docs)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(build, doc): doc.id for doc in docs}
            for future in as_completed(futures):
                yield futures[future], future.result()

    def _execute_per_document(self, ev, spec: ActionSpec, docs) -> Iterator[ActionEvent]:
        columns, build = self._row_builder(spec)
        yield ev("ActionStarted", {"kind": spec.kind, "columns": columns})
        rows: dict[str, list[ResultCell]] = {}
        for doc_id, cells in self._parallel_rows(docs, build):
            rows[doc_id] = cells
            yield ev("RowCompleted", {"doc_id": doc_id, "cells": [c.to_dict() for c in cells]})
        # Canonical row order is collection order, whatever the arrival order was.
        table = ResultTable(
            columns=columns,
            doc_ids=[d.id for d in docs],
            cells={d.id: rows[d.id] for d in docs},
        )
        if self.cache is not None:
            self.cache.put(self.index, spec, table)
        yield ev("ActionCompleted", {"result": table.to_dict()})

    def _execute_collection(
        self, ev, spec: ActionSpec, docs, existing_columns: list[ExistingColumn]
    ) -> Iterator[ActionEvent]:
        question = spec.raw_query.strip()
        if not question:
            raise EmptyQuery("collection ask requires a question")
        yield ev("ActionStarted", {"kind": spec.kind, "columns": []})

        # Phase 1: identify the attributes needed to answer the question.
        yield ev("PhaseChanged", {"phase": "identify_attributes"})
        prompt = gw.render_prompt(
            "detect_attributes",
            {
                "Goal": self.goal or "",
                "Columns": [c.name for c in existing_columns],
                "Question": question,
            },
        )
        try:
            attributes = self._complete_json(
                "detect_attributes", "strong", prompt, gw.parse_attributes
            )
        except UnparseableResponse as err:
            raise ActionFailed(f"attribute detection failed: {err}") from err

        deduped: list[str] = []
        seen: set[str] = set()
        for attr in attributes:
            key = normalize_label(attr)
            if key and key not in seen:
                seen.add(key)
                deduped.append(attr)

        by_label = {normalize_label(c.name): c for c in existing_columns}
        uses = [AttributeUse(a, normalize_label(a) in by_label) for a in deduped]
        missing = [u.name for u in uses if not u.reused]

        # Phase 2: search each missing attribute across the scoped documents.
        yield ev("PhaseChanged", {"phase": "search_missing_attributes", "attributes": missing})
        doc_ids = [d.id for d in docs]
        rows: dict[str, list[ResultCell]] = {d: [] for d in doc_ids}

        def build(doc: Document) -> list[ResultCell]:
            cells = []
            for attr in missing:
                try:
                    cells.append(self._semantic_cell(doc, attr))
                except Exception as err:
                    cells.append(self._error_cell(err))
            return cells

        searched: dict[str, dict[str, ResultCell]] = {a: {} for a in missing}
        if missing:
            for doc_id, cells in self._parallel_rows(list(docs), build):
                for attr, cell in zip(missing, cells):
                    searched[attr][doc_id] = cell

        # Phase 3: merge reused and fresh columns into the evidence table.
        yield ev("PhaseChanged", {"phase": "update_table"})
        columns = [u.name for u in uses]
        for doc in docs:
            row = []
            for use in uses:
                if use.reused:
                    cell = by_label[normalize_label(use.name)].cells.get(doc.id)
                    # Deep copy: evidence cells must not alias the source column.
                    row.append(
                        ResultCell.from_dict(cell.to_dict()) if cell is not None else self._empty_cell()
                    )
                else:
                    row.append(searched[use.name].get(doc.id, self._empty_cell()))
            rows[doc.id] = row
            yield ev(
                "RowCompleted",
                {"doc_id": doc.id, "cells": [c.to_dict() for c in row]},
            )
        evidence = ResultTable(columns=columns, doc_ids=doc_ids, cells=rows)

        # Phase 4: synthesize the final answer over the plain-text table.
        yield ev("PhaseChanged", {"phase": "synthesize"})
        table_text = format_evidence_table(evidence, self.collection)
        synth_prompt = gw.render_prompt(
            "synthesize", {"Table": table_text, "Question": question}
        )
        response = self.gateway.complete(gw.action_request("synthesize", "strong", synth_prompt))
        answer = CollectionAnswer(
            answer=response.text.strip(),
            evidence=evidence,
            attributes_used=uses,
        )
        if self.cache is not None:
            self.cache.put(self.index, spec, answer)
        yield ev("ActionCompleted", {"answer": answer.answer, "result": answer.to_dict()})

    # --- drained conveniences ---

    def _drain(self, spec: ActionSpec, existing_columns=None):
        final = None
        for event in self.execute(spec, existing_columns=existing_columns):
            if event.event == "ActionFailed":
                raise ActionFailed(event.payload["error"])
            if event.event == "ActionCompleted":
                final = event.payload["result"]
        assert final is not None
        return final

    def run_search(self, spec: ActionSpec) -> ResultTable:
        assert spec.kind == SEARCH_KIND
        return ResultTable.from_dict(self._drain(spec))

    def run_ask_each(self, spec: ActionSpec) -> ResultTable:
        assert spec.kind == ASK_EACH_KIND
        return ResultTable.from_dict(self._drain(spec))

    def run_summarize(self, spec: ActionSpec) -> ResultTable:
        assert spec.kind == SUMMARIZE_KIND
        return ResultTable.from_dict(self._drain(spec))

    def run_ask_collection(
        self, spec: ActionSpec, existing_columns: list[ExistingColumn] | None = None
    ) -> CollectionAnswer:
        assert spec.kind == ASK_COLLECTION_KIND
        return CollectionAnswer.from_dict(self._drain(spec, existing_columns))


def format_evidence_table(table: ResultTable, collection: Collection) -> str:
    """Plain-text rendering for the synthesis prompt: one line per document."""
    header = " | ".join(["Document"] + table.columns)
    lines = [header]
    for doc_id in table.doc_ids:
        filename = collection.document(doc_id).filename
        cells = [normalize_ws(c.text) for c in table.cells[doc_id]]
        lines.append(" | ".join([filename] + cells))
    return "\n".join(lines)
