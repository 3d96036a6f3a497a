"""Fixture-scripting helpers: compute the exact prompts the engine will send."""

from __future__ import annotations

import json

from docforager import semantic_topk
from docforager.gateway import ask_doc_examples, render_prompt


def retrieval_context(index, doc_id: str, query: str, k: int = 30) -> str:
    hits = sorted(semantic_topk(index, doc_id, query, k=k), key=lambda h: h.chunk.index)
    return "\n".join(h.chunk.text for h in hits)


def script_search(backend, index, doc, query: str, snippets: list[str]) -> None:
    prompt = render_prompt(
        "search", {"Context": retrieval_context(index, doc.id, query), "Query": query}
    )
    backend.script("fast", prompt, json.dumps({"snippets": snippets}))


def script_ask(backend, index, doc, question: str, answer: str) -> None:
    prompt = render_prompt(
        "ask_doc",
        {
            "Examples": ask_doc_examples(),
            "Context": retrieval_context(index, doc.id, question),
            "Question": question,
        },
    )
    backend.script("fast", prompt, answer)


def script_summary(backend, doc, answer: str, dimensions: str | None = None, index=None) -> None:
    if dimensions:
        context = retrieval_context(index, doc.id, dimensions)
        question = f"Provide a short summary of this document, with a specific focus on {dimensions}."
    else:
        context = "\n".join(c.text for c in doc.chunks[:30])
        question = "Provide a short summary of this document."
    prompt = render_prompt(
        "ask_doc",
        {"Examples": ask_doc_examples(), "Context": context, "Question": question},
    )
    backend.script("fast", prompt, answer)


def script_detect(backend, goal: str, columns: list[str], question: str, attributes: list[str]) -> None:
    prompt = render_prompt(
        "detect_attributes", {"Goal": goal, "Columns": columns, "Question": question}
    )
    backend.script("strong", prompt, json.dumps(attributes))


def script_suggestions(backend, collection, goal, history, searches, questions) -> str:
    samples = [d.full_text[:1000] for d in collection.documents[:3]]
    prompt = render_prompt(
        "suggestions",
        {
            "Goal": goal or "",
            "SampleDocuments": samples,
            "Searches": history[0],
            "Questions": history[1],
        },
    )
    backend.script(
        "fast",
        prompt,
        json.dumps({"suggested_searches": searches, "suggested_questions": questions}),
    )
    return prompt


class SynthesizeCatcher:
    """Wraps a MockBackend: answers any synthesize prompt, records it for inspection."""

    def __init__(self, inner, answer: str):
        self.inner = inner
        self.answer = answer
        self.synthesize_prompts: list[str] = []

    @property
    def call_count(self):
        return self.inner.call_count + len(self.synthesize_prompts)

    def complete(self, model, request):
        if request.kind == "synthesize":
            self.synthesize_prompts.append(request.prompt)
            from docforager.gateway import LlmResponse

            return LlmResponse(chunks=[self.answer])
        return self.inner.complete(model, request)
