"""Shared demo corpus: a small collection of cleaning-service contracts.

The demos run entirely offline: the LLM side is the scripted mock backend and
embeddings come from the deterministic local provider.
"""

from __future__ import annotations

import json

from docforager import DocumentSource, SourceElement, create_collection
from docforager.gateway import MockBackend, render_prompt
from docforager.index import build_index, LocalHashEmbedder

PROVIDERS = [
    ("Brightside Cleaning", "carpet cleaning, window cleaning and restroom sanitation",
     "a one-time payment per service, inclusive of equipment and fees",
     "either party may terminate at any time with written notice"),
    ("Polar Shine Services", "carpet cleaning and restroom sanitation",
     "hourly billing at $45 per hour, invoices due net 30 days",
     "either party may terminate at any time with written notice"),
    ("Metro Sparkle Co", "window cleaning and office cleaning",
     "a one-time payment per service, inclusive of equipment and fees",
     "termination only for material breach with sixty days notice"),
    ("Golden Gate Custodial", "carpet cleaning, window cleaning and office cleaning",
     "a one-time payment per service, inclusive of equipment and fees",
     "either party may terminate at any time with written notice"),
]


def contract_source(i: int, provider: str, services: str, payment: str, termination: str):
    page1 = (
        f"Service Agreement with {provider}. "
        f"Services provided include {services}. "
        f"All supplies are furnished by the provider."
    )
    page2 = (
        f"Payment terms: the client will be billed {payment}. "
        f"Termination: {termination}. Signed on behalf of {provider}."
    )
    return DocumentSource(
        filename=f"contract_{i:02d}.txt",
        elements=(SourceElement(page1, 1), SourceElement(page2, 2)),
    )


def demo_collection():
    sources = [contract_source(i, *p) for i, p in enumerate(PROVIDERS)]
    return create_collection(
        "demo-contracts", sources, goal="find a cleaning service provider with good benefits"
    )


def demo_runtime():
    """Collection + index + mock backend, ready for the engine."""
    collection = demo_collection()
    provider = LocalHashEmbedder()
    index = build_index(collection, provider)
    backend = MockBackend()
    return collection, index, backend


def script_search_response(backend, index, doc, query, snippets):
    """Pre-script what the 'model' extracts for one (document, query) pair."""
    from docforager import semantic_topk

    hits = sorted(semantic_topk(index, doc.id, query), key=lambda h: h.chunk.index)
    context = "\n".join(h.chunk.text for h in hits)
    prompt = render_prompt("search", {"Context": context, "Query": query})
    backend.script("fast", prompt, json.dumps({"snippets": snippets}))
