"""Ingest a collection and search it two ways: lexical (quoted) and semantic.

Lexical search never touches the LLM: quoted queries scan chunk text directly
and every hit is a verbatim sentence with exact character offsets. Semantic
search retrieves the top-30 chunks by cosine similarity, asks the model to
extract relevant spans, and aligns each returned snippet back to an exact
span in the source document.
"""

from sample_data import demo_runtime, script_search_response

from docforager import ActionEngine, ActionSpec, resolve_span
from docforager.gateway import LlmGateway

collection, index, backend = demo_runtime()
engine = ActionEngine(collection, index, LlmGateway(backend))

print(f"collection {collection.name!r}: {len(collection.documents)} documents")
for doc in collection.documents:
    print(f"  {doc.filename}: {len(doc.chunks)} chunks over 2 pages")

# --- lexical: quoted query, zero LLM calls ---
print('\n== Search: "window cleaning" (lexical) ==')
table = engine.run_search(ActionSpec("Search", '"window cleaning"'))
for doc in collection.documents:
    cell = table.cells[doc.id][0]
    print(f"  {doc.filename}: {cell.text[:70]}")
print(f"LLM calls so far: {backend.call_count} (lexical bypass)")

# --- semantic: the mock model extracts the payment sentence verbatim ---
query = "payment obligations"
for doc in collection.documents:
    payment_chunk = next(c for c in doc.chunks if "Payment terms" in c.text)
    script_search_response(backend, index, doc, query, [payment_chunk.text])

print(f"\n== Search: {query!r} (semantic) ==")
table = engine.run_search(ActionSpec("Search", query))
for doc in collection.documents:
    cell = table.cells[doc.id][0]
    start, end = cell.spans[0]
    resolved, page = resolve_span(collection, doc.id, start, end)
    assert resolved == cell.text, "extracted cells resolve verbatim"
    print(f"  {doc.filename} [page {page}, chars {start}-{end}]: {cell.text[:60]}...")

print(f"LLM calls total: {backend.call_count}")
