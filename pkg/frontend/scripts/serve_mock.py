"""Launch the mock-backed engine service with a seeded workspace for UI tests.

Prints one JSON line with the base URL and seeded ids, then serves until
killed. Everything is seeded through the engine's own APIs: a contracts
collection, a notebook holding one executed lexical search (snippet cells
with exact spans, one of them edited), and one pending suggestion cell.
"""

import json
import socket
import sys
import tempfile

import uvicorn

from docforager import ActionEngine, ActionSpec, DocumentSource, SourceElement, create_collection
from docforager.config import ApiConfig, build_runtime
from docforager.engine import SEARCH_KIND
from docforager.gateway import LlmGateway
from docforager.index import build_index
from docforager.notebook import STATUS_COMPLETED, create_action_cell, edit_result, new_notebook
from docforager.service import create_app
from docforager.suggestions import suggest_into
from docforager.notebook import SuggestionSet

PROVIDERS = [
    ("Brightside Cleaning", True, True),
    ("Polar Shine Services", True, False),
    ("Evergreen Janitorial", True, True),
    ("Metro Sparkle Co", False, True),
    ("Golden Gate Custodial", True, True),
    ("Bayview Maintenance", False, False),
    ("Summit Facility Care", True, True),
    ("Harbor Light Cleaning", True, False),
    ("Pacific Crest Services", True, True),
    ("Cedar Grove Upkeep", False, True),
]


def sources():
    out = []
    for i, (provider, carpet, window) in enumerate(PROVIDERS):
        services = ["office cleaning"]
        if carpet:
            services.append("carpet cleaning")
        if window:
            services.append("window cleaning")
        page1 = (
            f"Service Agreement with {provider}. "
            f"Services provided include {', '.join(services)}. "
            f"Supplies are furnished by {provider}."
        )
        page2 = (
            "Payment terms: the client will be billed a one-time payment per service. "
            f"Termination: either party may terminate with written notice. Signed by {provider}."
        )
        out.append(
            DocumentSource(
                filename=f"contract_{i:02d}.txt",
                elements=(SourceElement(page1, 1), SourceElement(page2, 2)),
            )
        )
    return out


def main() -> None:
    data_dir = tempfile.mkdtemp(prefix="docforager-ui-test-")
    config = ApiConfig(data_dir=data_dir, mock=True, auto_suggest=False)
    runtime = build_runtime(config)

    collection = create_collection(
        "ui-contracts", sources(), goal="find a cleaning service provider"
    )
    index = build_index(collection, runtime.provider)
    runtime.collections.save(collection)
    runtime.indexes.save(index)

    # One executed lexical search: three columns of verbatim snippet cells
    # (every document matches all three queries), 30 cells total.
    engine = ActionEngine(collection, index, LlmGateway(runtime.gateway.backend))
    spec = ActionSpec(SEARCH_KIND, '"cleaning", "payment", "agreement"')
    table = engine.run_search(spec)
    notebook = new_notebook(collection.id, goal=collection.goal)
    cell = create_action_cell(notebook, spec)
    cell.result = table
    cell.status = STATUS_COMPLETED
    # Edit one value: edited cells lose their spans and must not navigate.
    edited_doc = collection.documents[0]
    edit_result(notebook, cell.id, edited_doc.id, "cleaning", new_text="manually corrected note")

    suggestion = suggest_into(
        notebook,
        SuggestionSet(searches=["late fees"], questions=["What is the notice period?"]),
    )
    runtime.notebooks.save(notebook)

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]

    meta = {
        "base_url": f"http://127.0.0.1:{port}",
        "collection_id": collection.id,
        "notebook_id": notebook.id,
        "action_cell_id": cell.id,
        "suggestion_cell_id": suggestion.id,
        "edited_doc_id": edited_doc.id,
        "data_dir": data_dir,
    }
    print(json.dumps(meta), flush=True)

    app = create_app(runtime=runtime)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="error")


if __name__ == "__main__":
    sys.exit(main())
