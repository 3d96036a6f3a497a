"""AI-suggested follow-up queries: generation, accepting, dismissing.

Suggestions are generated from the goal, up to three sample documents (first
1000 characters each), and the executed-action history, at temperature 0.7 /
128 tokens. The prompt asks for up to two searches and two questions; the
displayed set is capped at three total, searches first, after dropping blanks
and anything already executed.
"""

from __future__ import annotations

from . import gateway as gw
from .corpus import Collection
from .engine import ASK_EACH_KIND, SEARCH_KIND, ActionSpec, normalize_label
from .errors import AlreadyResolved, UnparseableResponse
from .notebook import (
    ActionCell,
    Notebook,
    SuggestionCell,
    SuggestionSet,
    create_action_cell,
    create_suggestion_cell,
)

MAX_DISPLAYED = 3
SAMPLE_DOCS = 3
SAMPLE_CHARS = 1000


def generate(
    gateway: gw.LlmGateway,
    collection: Collection,
    goal: str | None,
    history: tuple[list[str], list[str]],
) -> SuggestionSet:
    """Generate a filtered suggestion set; unparseable output yields an empty set."""
    searches_hist, questions_hist = history
    samples = [d.full_text[:SAMPLE_CHARS] for d in collection.documents[:SAMPLE_DOCS]]
    prompt = gw.render_prompt(
        "suggestions",
        {
            "Goal": goal or "",
            "SampleDocuments": samples,
            "Searches": searches_hist,
            "Questions": questions_hist,
        },
    )
    try:
        response = gateway.complete(gw.suggestion_request(prompt))
        try:
            searches, questions = gw.parse_suggestions(response.text)
        except UnparseableResponse:
            repair = f"{prompt}\n\n{gw.REPAIR_INSTRUCTION}"
            response = gateway.complete(gw.suggestion_request(repair))
            searches, questions = gw.parse_suggestions(response.text)
    except UnparseableResponse:
        return SuggestionSet()

    seen = {normalize_label(q) for q in searches_hist + questions_hist}

    def fresh(items: list[str]) -> list[str]:
        out = []
        for item in items:
            item = item.strip()
            key = normalize_label(item)
            if item and key not in seen:
                seen.add(key)
                out.append(item)
        return out

    searches = fresh(searches)
    questions = fresh(questions)[: max(0, MAX_DISPLAYED - len(searches))]
    return SuggestionSet(searches=searches[:MAX_DISPLAYED], questions=questions)


def suggest_into(notebook: Notebook, suggestions: SuggestionSet) -> SuggestionCell | None:
    """Insert a suggestion cell immediately below the most recently created cell.

    Empty sets are suppressed (no cell).
    """
    if suggestions.is_empty():
        return None
    if notebook.cells:
        latest = max(notebook.cells, key=lambda c: c.created_seq)
        suggestions.created_after_cell = latest.id
        position = notebook.index_of(latest.id) + 1
    else:
        suggestions.created_after_cell = None
        position = 0
    return create_suggestion_cell(notebook, suggestions, position)


def _pending(notebook: Notebook, cell_id: str) -> SuggestionCell:
    cell = notebook.cell(cell_id)
    if not isinstance(cell, SuggestionCell):
        raise AlreadyResolved(f"cell {cell_id} is not a suggestion cell")
    if cell.state != "pending":
        raise AlreadyResolved(f"suggestion cell {cell_id} is already {cell.state}")
    return cell


def accept(notebook: Notebook, cell_id: str, item: str, item_kind: str | None = None) -> ActionCell:
    """Turn one suggested item into a pre-populated, unexecuted Action cell below."""
    cell = _pending(notebook, cell_id)
    if item_kind is None:
        if item in cell.suggestions.searches:
            item_kind = "search"
        elif item in cell.suggestions.questions:
            item_kind = "question"
        else:
            raise ValueError(f"item {item!r} is not in this suggestion cell")
    kind = SEARCH_KIND if item_kind == "search" else ASK_EACH_KIND
    spec = ActionSpec(kind=kind, raw_query=item)
    position = notebook.index_of(cell_id) + 1
    action = create_action_cell(notebook, spec, position)
    cell.state = "accepted"
    notebook.touch()
    return action


def dismiss(notebook: Notebook, cell_id: str) -> Notebook:
    """Dismissed cells leave the render list; their items may be re-suggested."""
    cell = _pending(notebook, cell_id)
    cell.state = "dismissed"
    notebook.touch()
    return notebook
