"""Embedding determinism, cosine top-k vs brute-force oracle, lexical scan oracle."""

import json
import math

import httpx
import numpy as np
import pytest

from docforager import (
    IndexStore,
    LocalHashEmbedder,
    RemoteEmbedder,
    VectorIndex,
    build_index,
    lexical_find,
    semantic_topk,
)
from docforager.errors import NotFound, ProviderMismatch, ProviderUnavailable, UnknownDocument
from docforager.index import EMBEDDING_DIM, topk_by_vector


def brute_force_ranking(mat: np.ndarray, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Independent oracle: fsum dot products, full sort with index tie-break."""
    scored = [
        (i, math.fsum(float(a) * float(b) for a, b in zip(row, query)))
        for i, row in enumerate(mat)
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


class TestLocalEmbedder:
    def test_deterministic(self, embedder):
        a = embedder.embed("net payment terms")
        b = embedder.embed("net payment terms")
        assert np.array_equal(a, b)

    def test_unit_norm(self, embedder):
        for text in ("alpha", "the quick brown fox", "12 monkeys", "Ünïcode tökens"):
            assert abs(np.linalg.norm(embedder.embed(text)) - 1.0) < 1e-6

    def test_self_similarity(self, embedder):
        v = embedder.embed("termination clauses")
        assert abs(float(v @ v) - 1.0) < 1e-6

    def test_dimension(self, embedder):
        assert embedder.embed("x").shape == (EMBEDDING_DIM,)

    def test_empty_text_rejected(self, embedder):
        with pytest.raises(ValueError):
            embedder.embed("   ")

    def test_punctuation_only_still_embeds(self, embedder):
        assert abs(np.linalg.norm(embedder.embed("!!!")) - 1.0) < 1e-6

    def test_fresh_instance_same_vectors(self):
        a = LocalHashEmbedder().embed("carpet cleaning")
        b = LocalHashEmbedder().embed("carpet cleaning")
        assert np.array_equal(a, b)


class TestBuildIndex:
    def test_entry_count_equals_chunk_count(self, contracts, contracts_index):
        total = sum(len(d.chunks) for d in contracts.documents)
        assert contracts_index.entry_count() == total

    def test_rebuild_identical(self, contracts, embedder, contracts_index):
        again = build_index(contracts, embedder)
        assert again.content_hash == contracts_index.content_hash
        for doc_id in contracts_index.vectors:
            assert np.array_equal(again.vectors[doc_id], contracts_index.vectors[doc_id])

    def test_provider_id_recorded(self, contracts_index, embedder):
        assert contracts_index.provider_id == embedder.provider_id


class TestSemanticTopK:
    def test_default_k_is_30(self, contracts, contracts_index):
        doc = contracts.documents[0]
        hits = semantic_topk(contracts_index, doc.id, "payment")
        assert len(hits) == min(30, len(doc.chunks))

    def test_truncates_to_chunk_count(self, contracts, contracts_index):
        doc = contracts.documents[0]
        hits = semantic_topk(contracts_index, doc.id, "anything", k=30)
        assert len(hits) == len(doc.chunks)

    def test_unknown_document(self, contracts_index):
        with pytest.raises(UnknownDocument):
            semantic_topk(contracts_index, "missing", "q")

    def test_k_must_be_positive(self, contracts, contracts_index):
        with pytest.raises(ValueError):
            semantic_topk(contracts_index, contracts.documents[0].id, "q", k=0)

    def test_descending_scores_in_bounds(self, contracts, contracts_index):
        hits = semantic_topk(contracts_index, contracts.documents[3].id, "termination notice")
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        assert all(-1.0 - 1e-9 <= s <= 1.0 + 1e-9 for s in scores)

    def test_chunk_self_score_is_one(self, contracts, contracts_index):
        doc = contracts.documents[2]
        chunk = doc.chunks[1]
        hits = semantic_topk(contracts_index, doc.id, chunk.text, k=1)
        assert hits[0].chunk.index == chunk.index
        assert abs(hits[0].score - 1.0) < 1e-6

    def test_repeated_calls_identical(self, contracts, contracts_index):
        doc = contracts.documents[5]
        first = semantic_topk(contracts_index, doc.id, "fees")
        second = semantic_topk(contracts_index, doc.id, "fees")
        assert [(h.chunk.index, h.score) for h in first] == [
            (h.chunk.index, h.score) for h in second
        ]

    def test_matches_oracle_on_fixture_corpora(self, contracts, resumes, contracts_index, resumes_index, embedder):
        for collection, index in ((contracts, contracts_index), (resumes, resumes_index)):
            for doc in collection.documents:
                query = embedder.embed("one-time payment for carpet cleaning services")
                for k in (1, 5, 30):
                    hits = topk_by_vector(index, doc.id, query, k)
                    oracle = brute_force_ranking(index.vectors[doc.id], query, k)
                    assert [h.chunk.index for h in hits] == [i for i, _ in oracle]
                    for h, (_, score) in zip(hits, oracle):
                        assert abs(h.score - score) < 1e-9

    def test_tie_break_by_chunk_index(self, contracts):
        # Duplicate rows produce exact ties; stable order must be ascending index.
        rng = np.random.default_rng(7)
        mat = rng.standard_normal((6, EMBEDDING_DIM))
        mat[3] = mat[1]
        mat[5] = mat[1]
        mat /= np.linalg.norm(mat, axis=1, keepdims=True)
        index = VectorIndex(
            collection_id=contracts.id,
            provider_id="test",
            vectors={contracts.documents[0].id: mat[: len(contracts.documents[0].chunks)]},
            collection=contracts,
        )
        n = min(6, len(contracts.documents[0].chunks))
        query = mat[1]
        hits = topk_by_vector(index, contracts.documents[0].id, query, n)
        tied = [h.chunk.index for h in hits if abs(h.score - hits[0].score) < 1e-12]
        assert tied == sorted(tied)


class TestLexicalFind:
    @staticmethod
    def naive_scan(document, query):
        """Character-by-character oracle with lowercase folding (ASCII fixtures)."""
        out = []
        q = query.lower()
        for chunk in document.chunks:
            lowered = chunk.text.lower()
            for i in range(len(lowered) - len(q) + 1):
                if lowered[i : i + len(q)] == q:
                    out.append((chunk.index, chunk.char_start + i, chunk.char_start + i + len(q)))
        return out

    def test_carpet_cleaning_over_contracts(self, contracts):
        listing = []
        for doc in contracts.documents:
            hits = lexical_find(doc, "carpet cleaning")
            if hits:
                listing.append(doc.filename)
            assert [(c.index, a, b) for c, a, b in hits] == self.naive_scan(doc, "carpet cleaning")
        # Providers 0,1,2,4,6,7,8 list carpet cleaning in the fixture corpus.
        assert listing == [f"contract_{i:02d}.txt" for i in (0, 1, 2, 4, 6, 7, 8)]

    def test_case_insensitive(self, contracts):
        doc = contracts.documents[0]
        assert lexical_find(doc, "CARPET CLEANING")
        assert [(c.index, a, b) for c, a, b in lexical_find(doc, "CARPET CLEANING")] == (
            self.naive_scan(doc, "carpet cleaning")
        )

    def test_absent_query_empty(self, contracts):
        assert lexical_find(contracts.documents[0], "zamboni maintenance") == []

    def test_full_chunk_match_spans_chunk(self, contracts):
        doc = contracts.documents[0]
        chunk = doc.chunks[0]
        hits = lexical_find(doc, chunk.text)
        assert (hits[0][1], hits[0][2]) == (chunk.char_start, chunk.char_end)

    def test_offsets_are_absolute(self, contracts):
        for doc in contracts.documents:
            for chunk, start, end in lexical_find(doc, "cleaning"):
                assert doc.full_text[start:end].lower() == "cleaning"

    def test_empty_query_rejected(self, contracts):
        with pytest.raises(ValueError):
            lexical_find(contracts.documents[0], "")

    def test_whole_word_mode(self, contracts):
        doc = contracts.documents[0]
        assert lexical_find(doc, "clean", whole_word=True) == []
        assert lexical_find(doc, "cleaning", whole_word=True)

    def test_document_order(self, contracts):
        for doc in contracts.documents:
            hits = lexical_find(doc, "the")
            positions = [a for _, a, _ in hits]
            assert positions == sorted(positions)


class TestPersistence:
    def test_round_trip(self, tmp_path, contracts, contracts_index, embedder):
        store = IndexStore(tmp_path)
        store.save(contracts_index)
        loaded = store.load(contracts, embedder)
        assert loaded.provider_id == contracts_index.provider_id
        assert loaded.content_hash == contracts_index.content_hash
        for doc_id in contracts_index.vectors:
            assert np.array_equal(loaded.vectors[doc_id], contracts_index.vectors[doc_id])

    def test_missing_index(self, tmp_path, contracts, embedder):
        with pytest.raises(NotFound):
            IndexStore(tmp_path).load(contracts, embedder)

    def test_provider_mismatch_rejected(self, tmp_path, contracts, contracts_index):
        store = IndexStore(tmp_path)
        store.save(contracts_index)

        class OtherProvider:
            provider_id = "someone-else"

        with pytest.raises(ProviderMismatch):
            store.load(contracts, OtherProvider())

    def test_json_is_binary_free(self, tmp_path, contracts_index):
        store = IndexStore(tmp_path)
        path = store.save(contracts_index)
        data = json.loads(path.read_text())
        first_doc = next(iter(data["docs"].values()))
        assert isinstance(first_doc[0][0], float)
        assert len(first_doc[0]) == EMBEDDING_DIM


class TestRemoteEmbedder:
    def _provider(self, handler, **kwargs):
        return RemoteEmbedder(
            "http://embed.test/v1", transport=httpx.MockTransport(handler), **kwargs
        )

    def test_normalizes_and_returns(self):
        def handler(request):
            texts = json.loads(request.content)["texts"]
            vecs = [[1.0] + [0.0] * (EMBEDDING_DIM - 1) for _ in texts]
            return httpx.Response(200, json={"embeddings": vecs})

        provider = self._provider(handler)
        out = provider.embed_batch(["a", "b"])
        assert out.shape == (2, EMBEDDING_DIM)
        assert abs(np.linalg.norm(out[0]) - 1.0) < 1e-9

    def test_unreachable_after_retries(self):
        calls = []

        def handler(request):
            calls.append(1)
            raise httpx.ConnectError("down")

        provider = self._provider(handler, retries=2)
        with pytest.raises(ProviderUnavailable):
            provider.embed_batch(["a"])
        assert len(calls) == 3

    def test_wrong_dimension_rejected(self):
        def handler(request):
            return httpx.Response(200, json={"embeddings": [[1.0, 2.0]]})

        with pytest.raises(ProviderUnavailable):
            self._provider(handler, retries=0).embed_batch(["a"])
