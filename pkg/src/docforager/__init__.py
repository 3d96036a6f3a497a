"""docforager: collection-centric document foraging with LLM-backed actions.

Ingest a collection of business documents, search it lexically or
semantically, ask questions per document or across the collection, and keep
every extracted snippet traceable to an exact character span in its source.
"""

from .corpus import (
    Chunk,
    Collection,
    CollectionStore,
    Document,
    DocumentSource,
    SourceElement,
    create_collection,
    ingest_document,
    resolve_span,
    split_sentences,
)
from .engine import (
    ActionEngine,
    ActionSpec,
    CollectionAnswer,
    ResultCell,
    ResultTable,
    parse_query,
)
from .gateway import LlmGateway, MockBackend, render_prompt
from .index import (
    IndexStore,
    LocalHashEmbedder,
    RemoteEmbedder,
    VectorIndex,
    build_index,
    lexical_find,
    semantic_topk,
)

__version__ = "0.1.0"

__all__ = [
    "ActionEngine",
    "ActionSpec",
    "Chunk",
    "Collection",
    "CollectionAnswer",
    "CollectionStore",
    "Document",
    "DocumentSource",
    "IndexStore",
    "LlmGateway",
    "LocalHashEmbedder",
    "MockBackend",
    "RemoteEmbedder",
    "ResultCell",
    "ResultTable",
    "SourceElement",
    "VectorIndex",
    "build_index",
    "create_collection",
    "ingest_document",
    "lexical_find",
    "parse_query",
    "render_prompt",
    "resolve_span",
    "semantic_topk",
    "split_sentences",
]
