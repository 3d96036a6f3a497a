"""AI-suggested follow-up queries: generate, accept into an Action cell, dismiss.

The suggestion prompt carries the goal, up to three sample documents (first
1000 characters each), and the queries already executed; returned items are
deduplicated against that history and capped at three, searches first.
"""

import json

from sample_data import demo_runtime

from docforager.gateway import LlmGateway, render_prompt
from docforager.notebook import action_history, new_notebook, render_cells
from docforager.suggestions import accept, dismiss, generate, suggest_into

collection, index, backend = demo_runtime()
gateway = LlmGateway(backend)
notebook = new_notebook(collection.id, goal=collection.goal)

history = action_history(notebook)  # fresh notebook: ([], [])
samples = [d.full_text[:1000] for d in collection.documents[:3]]
prompt = render_prompt(
    "suggestions",
    {"Goal": collection.goal or "", "SampleDocuments": samples,
     "Searches": history[0], "Questions": history[1]},
)
backend.script("fast", prompt, json.dumps({
    "suggested_searches": ["payment terms", "insurance coverage"],
    "suggested_questions": ["Does the provider furnish supplies?", "What is the notice period?"],
}))

suggestion_set = generate(gateway, collection, collection.goal, history)
print("suggested searches: ", suggestion_set.searches)
print("suggested questions:", suggestion_set.questions)
print("(capped at 3 total, searches first)")

cell = suggest_into(notebook, suggestion_set)
print(f"\nsuggestion cell {cell.id} placed at position {notebook.index_of(cell.id)}")

action = accept(notebook, cell.id, "payment terms")
print(f"accepted 'payment terms' -> {action.spec.kind} cell, status={action.status}")
print("visible cells:", [c.kind for c in render_cells(notebook)])

second = suggest_into(notebook, type(suggestion_set)(searches=["late fees"], questions=[]))
dismiss(notebook, second.id)
print("after dismiss:", [c.kind for c in render_cells(notebook)], "(dismissed cell hidden)")
