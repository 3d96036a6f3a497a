"""Ask a question over the whole collection: the five-phase evidence pipeline.

The engine (1) asks the strong model which per-document attributes the
question needs, (2) searches each document for attributes that are not
already table columns, (3) merges reused and fresh columns into an evidence
table, (4) synthesizes the final answer from a plain-text rendering of that
table, and (5) returns the answer plus the evidence for verification.
"""

import json

from sample_data import demo_runtime, script_search_response

from docforager import ActionEngine, ActionSpec
from docforager.engine import ExistingColumn, ResultCell, format_evidence_table
from docforager.gateway import LlmGateway, render_prompt

collection, index, backend = demo_runtime()
gateway = LlmGateway(backend)
engine = ActionEngine(collection, index, gateway)

question = "Which providers bill a one-time payment and allow flexible termination?"

# A previous Search already produced a "payment structure" column; the
# detection phase will reuse it instead of searching again.
existing = [
    ExistingColumn(
        name="payment structure",
        cells={
            d.id: ResultCell(text=next(c.text for c in d.chunks if "Payment terms" in c.text))
            for d in collection.documents
        },
    )
]

# Scripted strong-model responses: detection names two attributes (one reused).
detect_prompt = render_prompt(
    "detect_attributes",
    {
        "Goal": collection.goal or "",
        "Columns": [c.name for c in existing],
        "Question": question,
    },
)
backend.script("strong", detect_prompt, json.dumps(["payment structure", "termination policy"]))

# Per-document searches for the one missing attribute.
for doc in collection.documents:
    termination_chunk = next(c for c in doc.chunks if "Termination" in c.text)
    script_search_response(
        backend, index, doc, "termination policy", [termination_chunk.text]
    )


class AnswerAnyTable:
    """The synthesize prompt depends on the searched table; answer it generically."""

    def __init__(self, inner):
        self.inner = inner

    @property
    def call_count(self):
        return self.inner.call_count

    def complete(self, model, request):
        if request.kind == "synthesize":
            from docforager.gateway import LlmResponse

            return LlmResponse(
                chunks=["Brightside Cleaning and Golden Gate Custodial meet both criteria."]
            )
        return self.inner.complete(model, request)


engine.gateway = LlmGateway(AnswerAnyTable(backend))

print("question:", question)
for event in engine.execute(ActionSpec("AskCollection", question), existing_columns=existing):
    if event.event == "PhaseChanged":
        print("  phase:", event.payload["phase"], event.payload.get("attributes", ""))
    elif event.event == "ActionCompleted":
        answer = event.payload["answer"]

print("\nanswer:", answer)

result = engine.run_ask_collection(ActionSpec("AskCollection", question), existing)
print("\nattributes used:")
for use in result.attributes_used:
    print(f"  {use.name}  (reused: {use.reused})")
print("\nevidence table sent to the model:\n")
print(format_evidence_table(result.evidence, collection))
