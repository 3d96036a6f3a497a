"""Document ingestion: offset-tracked sentence chunks, collections, span resolution.

Character offsets are Unicode scalar positions into the document's
``full_text`` (never bytes), so UI highlighting can slice rendered text
directly. Every chunk satisfies ``full_text[char_start:char_end] == text``.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import uuid
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateFilename,
    EmptyCollection,
    EmptyDocument,
    MalformedSource,
    NotFound,
    SchemaVersionMismatch,
    SpanOutOfRange,
    UnknownDocument,
)

COLLECTION_SCHEMA_VERSION = 1

# Sentence boundary rule: a terminator (or bare newline) ends a sentence when
# followed by optional whitespace and an uppercase letter, or end-of-text.
_TERMINATORS = ".!?;"

# Trailing words that keep a following "." from ending a sentence.
# Compared casefolded, with inner dots preserved ("e.g", "u.s").
_ABBREVIATIONS = frozenset({
    "dr", "mr", "mrs", "ms", "prof", "jr", "sr", "st",
    "inc", "ltd", "co", "corp", "dept", "univ",
    "vs", "etc", "approx", "est", "fig", "vol", "al", "incl",
    "e.g", "i.e", "u.s", "u.k", "ph.d",
})

# Sentences longer than this are hard-wrapped at the nearest whitespace so
# retrieval context stays bounded.
MAX_CHUNK_CHARS = 600


@dataclass(frozen=True)
class SourceElement:
    """One structured-extraction element: a run of text attributed to a page."""

    text: str
    page: int


@dataclass(frozen=True)
class DocumentSource:
    """Raw ingestion payload: either plain text or a structured element list."""

    filename: str
    text: str | None = None
    elements: tuple[SourceElement, ...] | None = None


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    index: int
    text: str
    char_start: int
    char_end: int
    page: int | None = None


@dataclass
class Document:
    id: str
    filename: str
    full_text: str
    chunks: list[Chunk]


@dataclass
class Collection:
    id: str
    name: str
    documents: list[Document]
    goal: str | None = None
    _by_id: dict[str, Document] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._by_id = {d.id: d for d in self.documents}

    def document(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise UnknownDocument(f"no document with id {doc_id!r}") from None

    def doc_ids(self) -> list[str]:
        return [d.id for d in self.documents]


def _is_abbreviation(text: str, sentence_start: int, dot_pos: int) -> bool:
    """True when the token ending at ``dot_pos`` (a '.') is a stoplisted abbreviation."""
    i = dot_pos
    while i > sentence_start and (text[i - 1].isalpha() or text[i - 1] == "."):
        i -= 1
    token = text[i:dot_pos].rstrip(".")
    return bool(token) and token.casefold() in _ABBREVIATIONS


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def _wrap_long(text: str, start: int, end: int) -> list[tuple[int, int]]:
    """Hard-wrap [start, end) into pieces of at most MAX_CHUNK_CHARS.

    Cuts at the last whitespace at-or-before the limit; a whitespace-free run
    is cut at exactly the limit. Offsets are preserved; the split whitespace
    becomes an inter-chunk gap.
    """
    pieces: list[tuple[int, int]] = []
    s = start
    while end - s > MAX_CHUNK_CHARS:
        window = text[s : s + MAX_CHUNK_CHARS + 1]
        cut_rel = max((i for i, ch in enumerate(window) if ch.isspace()), default=-1)
        cut = s + (cut_rel if cut_rel > 0 else MAX_CHUNK_CHARS)
        piece = _trim(text, s, cut)
        if piece[0] < piece[1]:
            pieces.append(piece)
        while cut < end and text[cut].isspace():
            cut += 1
        s = cut
    if s < end:
        pieces.append((s, end))
    return pieces


def split_sentences(text: str) -> list[tuple[str, int, int]]:
    """Split text into sentence spans as (text, char_start, char_end).

    Spans are trimmed of surrounding whitespace, ordered, non-overlapping, and
    cover every non-whitespace character: rejoining spans with the skipped
    whitespace reconstructs the input exactly.
    """
    n = len(text)
    raw: list[tuple[int, int]] = []
    i = 0
    while i < n and text[i].isspace():
        i += 1
    start = i
    while i < n:
        ch = text[i]
        boundary_after = -1
        if ch in _TERMINATORS and not (ch == "." and _is_abbreviation(text, start, i)):
            boundary_after = i + 1
        elif ch == "\n":
            boundary_after = i
        if boundary_after >= 0:
            k = i + 1
            while k < n and text[k].isspace():
                k += 1
            if k == n or text[k].isupper():
                raw.append((start, boundary_after))
                i = k
                start = k
                continue
        i += 1
    if start < n:
        raw.append((start, n))

    spans: list[tuple[str, int, int]] = []
    for s, e in raw:
        s, e = _trim(text, s, e)
        if s >= e:
            continue
        for ps, pe in _wrap_long(text, s, e):
            spans.append((text[ps:pe], ps, pe))
    return spans


def _doc_id_for(filename: str) -> str:
    return hashlib.sha1(filename.encode("utf-8")).hexdigest()[:12]


def ingest_document(source: DocumentSource, doc_id: str | None = None) -> Document:
    """Build a Document from a source, chunking per element when structured."""
    if not source.filename:
        raise MalformedSource("source filename is empty")
    doc_id = doc_id or _doc_id_for(source.filename)

    chunks: list[Chunk] = []
    if source.elements is not None:
        if not source.elements:
            raise MalformedSource(f"{source.filename}: structured source has no elements")
        texts = []
        offset = 0
        for idx, el in enumerate(source.elements):
            if el.text is None:
                raise MalformedSource(f"{source.filename}: element {idx} missing text")
            if el.page < 1:
                raise MalformedSource(f"{source.filename}: element {idx} page must be >= 1")
            for piece, ps, pe in split_sentences(el.text):
                chunks.append(Chunk(doc_id, len(chunks), piece, offset + ps, offset + pe, el.page))
            texts.append(el.text)
            offset += len(el.text) + 1  # single joining newline
        full_text = "\n".join(texts)
    elif source.text is not None:
        full_text = source.text
        for piece, ps, pe in split_sentences(full_text):
            chunks.append(Chunk(doc_id, len(chunks), piece, ps, pe, None))
    else:
        raise MalformedSource(f"{source.filename}: source has neither text nor elements")

    if not chunks:
        raise EmptyDocument(f"{source.filename}: no extractable text")
    return Document(id=doc_id, filename=source.filename, full_text=full_text, chunks=chunks)


def create_collection(
    name: str,
    sources: list[DocumentSource],
    goal: str | None = None,
    collection_id: str | None = None,
) -> Collection:
    """Ingest sources (in order) into a new Collection."""
    if not sources:
        raise EmptyCollection("a collection needs at least one source")
    seen: set[str] = set()
    for src in sources:
        if src.filename in seen:
            raise DuplicateFilename(f"duplicate filename {src.filename!r}")
        seen.add(src.filename)
    documents = []
    for src in sources:
        try:
            documents.append(ingest_document(src))
        except (EmptyDocument, MalformedSource) as err:
            raise type(err)(f"[{src.filename}] {err}") from err
    return Collection(
        id=collection_id or uuid.uuid4().hex[:12],
        name=name,
        documents=documents,
        goal=goal,
    )


def resolve_span(
    collection: Collection, doc_id: str, char_start: int, char_end: int
) -> tuple[str, int | None]:
    """Return the exact substring and the page of the chunk containing char_start.

    When char_start falls in an inter-chunk gap, the next chunk's page is used.
    """
    doc = collection.document(doc_id)
    if not (0 <= char_start < char_end <= len(doc.full_text)):
        raise SpanOutOfRange(
            f"span ({char_start}, {char_end}) outside document of length {len(doc.full_text)}"
        )
    text = doc.full_text[char_start:char_end]
    page: int | None = None
    starts = [c.char_start for c in doc.chunks]
    pos = bisect_right(starts, char_start) - 1
    if pos >= 0 and doc.chunks[pos].char_end > char_start:
        page = doc.chunks[pos].page
    elif pos + 1 < len(doc.chunks):
        page = doc.chunks[pos + 1].page
    return text, page


# --- manifest parsing (the documented ingestion format) ---

def parse_manifest(data: object) -> tuple[str | None, str | None, list[DocumentSource]]:
    """Parse a manifest: either a list of document entries, or an object
    ``{"name": ..., "goal": ..., "documents": [...]}``.

    Each entry is ``{"filename", "text"}`` or
    ``{"filename", "elements": [{"text", "page"}]}``.
    """
    name = goal = None
    if isinstance(data, dict):
        name = data.get("name")
        goal = data.get("goal")
        entries = data.get("documents")
        if entries is None:
            raise MalformedSource("manifest object is missing 'documents'")
    elif isinstance(data, list):
        entries = data
    else:
        raise MalformedSource("manifest must be a list or an object with 'documents'")
    if not isinstance(entries, list):
        raise MalformedSource("'documents' must be a list")

    sources: list[DocumentSource] = []
    for i, entry in enumerate(entries):
        where = f"documents[{i}]"
        if not isinstance(entry, dict):
            raise MalformedSource(f"{where}: entry must be an object")
        filename = entry.get("filename")
        if not filename or not isinstance(filename, str):
            raise MalformedSource(f"{where}.filename: required non-empty string")
        if "elements" in entry:
            elements = entry["elements"]
            if not isinstance(elements, list) or not elements:
                raise MalformedSource(f"{where}.elements: must be a non-empty list")
            parsed = []
            for j, el in enumerate(elements):
                if not isinstance(el, dict) or not isinstance(el.get("text"), str):
                    raise MalformedSource(f"{where}.elements[{j}].text: required string")
                page = el.get("page", 1)
                if not isinstance(page, int) or page < 1:
                    raise MalformedSource(f"{where}.elements[{j}].page: integer >= 1")
                parsed.append(SourceElement(text=el["text"], page=page))
            sources.append(DocumentSource(filename=filename, elements=tuple(parsed)))
        elif isinstance(entry.get("text"), str):
            sources.append(DocumentSource(filename=filename, text=entry["text"]))
        else:
            raise MalformedSource(f"{where}: needs 'text' or 'elements'")
    return name, goal, sources


def load_manifest(path: str | Path) -> tuple[str | None, str | None, list[DocumentSource]]:
    with open(path, encoding="utf-8") as f:
        return parse_manifest(json.load(f))


# --- persistence ---

def _atomic_write(path: Path, payload: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload, encoding="utf-8")
    os.replace(tmp, path)


def collection_to_dict(collection: Collection) -> dict:
    return {
        "schema_version": COLLECTION_SCHEMA_VERSION,
        "id": collection.id,
        "name": collection.name,
        "goal": collection.goal,
        "documents": [
            {
                "id": d.id,
                "filename": d.filename,
                "full_text": d.full_text,
                "chunks": [
                    {
                        "doc_id": c.doc_id,
                        "index": c.index,
                        "text": c.text,
                        "char_start": c.char_start,
                        "char_end": c.char_end,
                        "page": c.page,
                    }
                    for c in d.chunks
                ],
            }
            for d in collection.documents
        ],
    }


def collection_from_dict(data: dict) -> Collection:
    version = data.get("schema_version")
    if version != COLLECTION_SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"collection schema {version!r} not supported")
    documents = [
        Document(
            id=d["id"],
            filename=d["filename"],
            full_text=d["full_text"],
            chunks=[
                Chunk(
                    doc_id=c.get("doc_id", d["id"]),
                    index=c["index"],
                    text=c["text"],
                    char_start=c["char_start"],
                    char_end=c["char_end"],
                    page=c.get("page"),
                )
                for c in d["chunks"]
            ],
        )
        for d in data["documents"]
    ]
    return Collection(id=data["id"], name=data["name"], documents=documents, goal=data.get("goal"))


class CollectionStore:
    """One JSON file per collection under ``<data_dir>/collections``."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir) / "collections"
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, collection_id: str) -> Path:
        return self.root / f"{collection_id}.json"

    def save(self, collection: Collection) -> Path:
        path = self.path(collection.id)
        _atomic_write(path, json.dumps(collection_to_dict(collection), ensure_ascii=False))
        return path

    def load(self, collection_id: str) -> Collection:
        path = self.path(collection_id)
        if not path.exists():
            raise NotFound(f"no collection with id {collection_id!r}")
        return collection_from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_ids(self) -> list[str]:
        # Vector indexes live beside collections as <id>.index.json; skip them.
        return sorted(
            p.stem for p in self.root.glob("*.json") if not p.name.endswith(".index.json")
        )

    def find(self, ref: str) -> Collection:
        """Look a collection up by id, falling back to exact name match."""
        try:
            return self.load(ref)
        except NotFound:
            pass
        for cid in self.list_ids():
            collection = self.load(cid)
            if collection.name == ref:
                return collection
        raise NotFound(f"no collection with id or name {ref!r}")
