"""The Table View: every executed query becomes a column, one row per document.

A notebook accumulates executed actions; the aggregate table joins their
columns in notebook order, keeps exactly one row per collection document, and
exports any filtered/reordered view as CSV.
"""

from sample_data import demo_runtime

from docforager import ActionEngine, ActionSpec
from docforager.aggregate import export_csv, rebuild, view
from docforager.gateway import LlmGateway
from docforager.notebook import STATUS_COMPLETED, create_action_cell, edit_result, new_notebook

collection, index, backend = demo_runtime()
engine = ActionEngine(collection, index, LlmGateway(backend))

notebook = new_notebook(collection.id, goal=collection.goal)
for query in ('"carpet cleaning"', '"window cleaning"', '"one-time payment"'):
    spec = ActionSpec("Search", query)
    cell = create_action_cell(notebook, spec)
    cell.result = engine.run_search(spec)
    cell.status = STATUS_COMPLETED

table = rebuild(notebook, collection)
print(f"aggregate table: {len(table.rows)} rows x (filename + {len(table.columns)} columns)")
print("columns:", table.labels())

# A user corrects one AI result in place; the table reflects the edit.
first_cell_id = notebook.cells[0].id
edit_result(notebook, first_cell_id, collection.documents[1].id, "carpet cleaning",
            new_text="carpet cleaning (steam only, confirmed by phone)")
table = rebuild(notebook, collection)

projected = view(table, column_filter=["one-time payment", "carpet cleaning"],
                 column_order=["one-time payment"])
print("\nprojected view columns:", projected.labels())

csv_bytes = export_csv(projected)
print("\nCSV export:\n")
print(csv_bytes.decode("utf-8"))
