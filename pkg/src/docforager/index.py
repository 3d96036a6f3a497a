"""Per-document retrieval: 384-d embeddings, exhaustive cosine top-k, lexical scan.

Collections here are tens to hundreds of documents, so the semantic side is an
exact full scan (no ANN structure); scores are cosine similarities of
unit-normalized vectors, i.e. plain dot products.
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Chunk, Collection, Document, _atomic_write
from .errors import NotFound, ProviderMismatch, ProviderUnavailable, UnknownDocument

EMBEDDING_DIM = 384
DEFAULT_TOP_K = 30

# Seed mixed into every token hash of the local provider. Changing it changes
# the provider identity, so it is part of LOCAL_PROVIDER_ID.
LOCAL_EMBEDDING_SEED = 384_001
LOCAL_PROVIDER_ID = f"local-hash-v1-{LOCAL_EMBEDDING_SEED}"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class LocalHashEmbedder:
    """Deterministic, network-free embedding provider.

    Each token maps to a fixed pseudo-random direction (seeded from a stable
    content hash); a text embeds to the normalized sum of its token vectors.
    Not semantically meaningful beyond token overlap, but deterministic, which
    is what the test provider contract requires.
    """

    provider_id = LOCAL_PROVIDER_ID

    def __init__(self) -> None:
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            digest = hashlib.sha256(f"{LOCAL_EMBEDDING_SEED}:{token}".encode()).digest()
            seed = int.from_bytes(digest[:8], "little")
            vec = np.random.default_rng(seed).standard_normal(EMBEDDING_DIM)
            self._token_cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        tokens = _TOKEN_RE.findall(text.casefold())
        if not tokens:
            tokens = [text]
        acc = np.zeros(EMBEDDING_DIM)
        for token in tokens:
            acc += self._token_vector(token)
        norm = np.linalg.norm(acc)
        if norm == 0.0:  # opposing token vectors cancelling out is effectively impossible
            acc[0] = 1.0
            norm = 1.0
        return acc / norm

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.embed(t) for t in texts])


class RemoteEmbedder:
    """HTTP provider: POST {"texts": [...]} -> {"embeddings": [[384 floats], ...]}."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        retries: int = 2,
        timeout: float = 30.0,
        transport=None,
    ):
        import httpx

        self.base_url = base_url
        self.retries = retries
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)
        self.provider_id = f"remote:{base_url}"

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        import httpx

        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(self.base_url, json={"texts": texts})
                resp.raise_for_status()
                vectors = np.asarray(resp.json()["embeddings"], dtype=float)
                break
            except (httpx.HTTPError, KeyError, ValueError) as err:
                last_error = err
        else:
            raise ProviderUnavailable(f"embedding provider {self.base_url}: {last_error}")
        if vectors.shape != (len(texts), EMBEDDING_DIM):
            raise ProviderUnavailable(
                f"provider returned shape {vectors.shape}, expected ({len(texts)}, {EMBEDDING_DIM})"
            )
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if not np.all(np.isfinite(vectors)) or np.any(norms == 0):
            raise ProviderUnavailable("provider returned non-finite or zero vectors")
        return vectors / norms

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        return self.embed_batch([text])[0]


@dataclass(frozen=True)
class SearchHit:
    chunk: Chunk
    score: float


@dataclass
class VectorIndex:
    """One unit vector per chunk of every document, pinned to one provider."""

    collection_id: str
    provider_id: str
    vectors: dict[str, np.ndarray]  # doc_id -> (n_chunks, EMBEDDING_DIM)
    collection: Collection | None = field(default=None, repr=False, compare=False)
    provider: object = field(default=None, repr=False, compare=False)

    def entry_count(self) -> int:
        return sum(int(mat.shape[0]) for mat in self.vectors.values())

    @property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.provider_id.encode())
        for doc_id in sorted(self.vectors):
            h.update(doc_id.encode())
            h.update(np.ascontiguousarray(self.vectors[doc_id]).tobytes())
        return h.hexdigest()[:16]


def build_index(collection: Collection, provider, *, fanout: int = 8) -> VectorIndex:
    """Embed every chunk of every document (documents in parallel)."""

    def embed_doc(doc: Document) -> tuple[str, np.ndarray]:
        try:
            texts = [c.text for c in doc.chunks]
            return doc.id, provider.embed_batch(texts)
        except ProviderUnavailable as err:
            raise ProviderUnavailable(f"[{doc.filename}] {err}") from err

    vectors: dict[str, np.ndarray] = {}
    workers = max(1, min(fanout, len(collection.documents)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for doc_id, mat in pool.map(embed_doc, collection.documents):
            vectors[doc_id] = mat
    return VectorIndex(
        collection_id=collection.id,
        provider_id=provider.provider_id,
        vectors=vectors,
        collection=collection,
        provider=provider,
    )


def topk_by_vector(index: VectorIndex, doc_id: str, query_vec: np.ndarray, k: int) -> list[SearchHit]:
    """Exhaustive cosine ranking of one document's chunks against a query vector.

    Descending score; ties broken by ascending chunk index (stable sort on the
    negated scores preserves original order among equals).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mat = index.vectors.get(doc_id)
    if mat is None:
        raise UnknownDocument(f"document {doc_id!r} not in index")
    if index.collection is None:
        raise ValueError("index has no attached collection")
    chunks = index.collection.document(doc_id).chunks
    # Per-row dot products, not a blocked matmul: identical chunks must score
    # bitwise-identically or the index tie-break would be meaningless.
    scores = np.array([np.dot(row, query_vec) for row in mat])
    order = np.argsort(-scores, kind="stable")[:k]
    return [SearchHit(chunk=chunks[i], score=float(scores[i])) for i in order]


def semantic_topk(index: VectorIndex, doc_id: str, query: str, k: int = DEFAULT_TOP_K) -> list[SearchHit]:
    """Top-k chunks of one document by cosine similarity to the embedded query."""
    if index.provider is None:
        raise ValueError("index has no attached provider")
    return topk_by_vector(index, doc_id, index.provider.embed(query), k)


def lexical_find(
    document: Document, query: str, *, whole_word: bool = False
) -> list[tuple[Chunk, int, int]]:
    """All case-insensitive occurrences of ``query``, in document order.

    Match offsets are absolute character offsets into the document full text.
    """
    if not query:
        raise ValueError("lexical query must be non-empty")
    pattern = re.escape(query)
    if whole_word:
        pattern = rf"\b{pattern}\b"
    rx = re.compile(pattern, re.IGNORECASE)
    out: list[tuple[Chunk, int, int]] = []
    for chunk in document.chunks:
        for m in rx.finditer(chunk.text):
            out.append((chunk, chunk.char_start + m.start(), chunk.char_start + m.end()))
    return out


# --- persistence: binary-free JSON beside the collection file ---

INDEX_SCHEMA_VERSION = 1


class IndexStore:
    """Persists indexes as ``<data_dir>/collections/<id>.index.json``."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir) / "collections"
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, collection_id: str) -> Path:
        return self.root / f"{collection_id}.index.json"

    def save(self, index: VectorIndex) -> Path:
        payload = {
            "schema_version": INDEX_SCHEMA_VERSION,
            "collection_id": index.collection_id,
            "provider_id": index.provider_id,
            "docs": {doc_id: mat.tolist() for doc_id, mat in index.vectors.items()},
        }
        path = self.path(index.collection_id)
        _atomic_write(path, json.dumps(payload))
        return path

    def load(self, collection: Collection, provider) -> VectorIndex:
        path = self.path(collection.id)
        if not path.exists():
            raise NotFound(f"no index for collection {collection.id!r}")
        data = json.loads(path.read_text(encoding="utf-8"))
        if provider is not None and data["provider_id"] != provider.provider_id:
            raise ProviderMismatch(
                f"index built with {data['provider_id']!r}, current provider is "
                f"{provider.provider_id!r}; rebuild the index"
            )
        vectors = {doc_id: np.asarray(mat, dtype=float) for doc_id, mat in data["docs"].items()}
        return VectorIndex(
            collection_id=data["collection_id"],
            provider_id=data["provider_id"],
            vectors=vectors,
            collection=collection,
            provider=provider,
        )
