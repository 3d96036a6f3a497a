"""Scriptable command line over the same engine the service uses.

Subcommands: ingest, search, ask, summarize, suggest, export, notebook, serve.
Human-readable tables by default; ``--json`` emits the engine's table schema.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import aggregate as agg
from . import suggestions as sugg
from .config import Runtime, build_runtime, load_config
from .corpus import Collection, create_collection, load_manifest
from .engine import (
    ASK_COLLECTION_KIND,
    ASK_EACH_KIND,
    SEARCH_KIND,
    SUMMARIZE_KIND,
    ActionEngine,
    ActionSpec,
    ResultTable,
    normalize_ws,
)
from .errors import ForagerError
from .index import build_index
from .notebook import (
    STATUS_COMPLETED,
    Notebook,
    action_history,
    create_action_cell,
    new_notebook,
)

_CELL_WIDTH = 48


def _shorten(text: str, width: int = _CELL_WIDTH) -> str:
    text = normalize_ws(text)
    return text if len(text) <= width else text[: width - 1] + "…"


def _print_table(collection: Collection, table: ResultTable) -> None:
    headers = ["document"] + [_shorten(c, 28) for c in table.columns]
    rows = []
    for doc_id in table.doc_ids:
        filename = collection.document(doc_id).filename
        rows.append([filename] + [_shorten(c.text) for c in table.cells[doc_id]])
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    click.echo("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    click.echo("  ".join("-" * w for w in widths))
    for row in rows:
        click.echo("  ".join(v.ljust(w) for v, w in zip(row, widths)))


def _runtime(ctx: click.Context) -> Runtime:
    params = ctx.obj
    flags = {
        "data_dir": params.get("data_dir"),
        "mock": params.get("mock"),
        "mock_fixtures_dir": params.get("fixtures"),
    }
    config = load_config(flags=flags, config_file=params.get("config"))
    return build_runtime(config)


def _resolve_docs(collection: Collection, docs: tuple[str, ...]) -> tuple[str, ...] | None:
    """Accept doc ids or filenames in --docs."""
    if not docs:
        return None
    by_filename = {d.filename: d.id for d in collection.documents}
    return tuple(by_filename.get(d, d) for d in docs)


def _record_cell(runtime: Runtime, notebook_id: str | None, spec: ActionSpec, result) -> None:
    if notebook_id is None:
        return

    def apply(nb: Notebook) -> None:
        cell = create_action_cell(nb, spec)
        cell.result = result
        cell.status = STATUS_COMPLETED

    runtime.notebooks.mutate(notebook_id, apply)


def _run_action(ctx, runtime: Runtime, collection: Collection, spec: ActionSpec, as_json: bool, notebook_id: str | None):
    index = runtime.indexes.load(collection, runtime.provider)
    goal = None
    if notebook_id is not None:
        goal = runtime.notebooks.load(notebook_id).goal
    engine = ActionEngine(
        collection, index, runtime.gateway, goal=goal, fanout=runtime.config.fanout
    )

    if spec.kind == ASK_COLLECTION_KIND:
        existing = []
        if notebook_id is not None:
            notebook = runtime.notebooks.load(notebook_id)
            existing = agg.existing_columns(agg.rebuild(notebook, collection))
        answer = engine.run_ask_collection(spec, existing)
        _record_cell(runtime, notebook_id, spec, answer)
        if as_json:
            click.echo(json.dumps(answer.to_dict(), ensure_ascii=False))
        else:
            click.echo(answer.answer)
            click.echo()
            _print_table(collection, answer.evidence)
    else:
        runner = {
            SEARCH_KIND: engine.run_search,
            ASK_EACH_KIND: engine.run_ask_each,
            SUMMARIZE_KIND: engine.run_summarize,
        }[spec.kind]
        table = runner(spec)
        _record_cell(runtime, notebook_id, spec, table)
        if as_json:
            click.echo(json.dumps(table.to_dict(), ensure_ascii=False))
        else:
            _print_table(collection, table)

    if ctx.obj.get("verbose"):
        click.echo(f"llm calls: {runtime.gateway.call_count}", err=True)


class _ForagerGroup(click.Group):
    """Translates engine errors into clean nonzero exits."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ForagerError as err:
            raise click.ClickException(str(err)) from err


@click.group(cls=_ForagerGroup)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None, help="Data directory.")
@click.option("--mock/--no-mock", default=None, help="Use the scripted mock LLM backend.")
@click.option("--fixtures", type=click.Path(path_type=Path), default=None, help="Mock fixture directory.")
@click.option("--config", "config", type=click.Path(path_type=Path), default=None, help="Config file (overrides flags).")
@click.option("--verbose", is_flag=True, help="Print call accounting to stderr.")
@click.pass_context
def main(ctx, data_dir, mock, fixtures, config, verbose):
    """Forage across a document collection from the command line."""
    ctx.obj = {
        "data_dir": data_dir,
        "mock": mock,
        "fixtures": fixtures,
        "config": config,
        "verbose": verbose,
    }


@main.command()
@click.argument("manifest", type=click.Path(exists=True, path_type=Path))
@click.option("--name", default=None, help="Collection name (defaults to manifest name).")
@click.option("--goal", default=None, help="Foraging goal recorded on the collection.")
@click.pass_context
def ingest(ctx, manifest, name, goal):
    """Ingest a manifest of documents and build the retrieval index."""
    runtime = _runtime(ctx)
    manifest_name, manifest_goal, sources = load_manifest(manifest)
    collection = create_collection(
        name or manifest_name or manifest.stem, sources, goal=goal or manifest_goal
    )
    index = build_index(collection, runtime.provider, fanout=runtime.config.fanout)
    runtime.collections.save(collection)
    runtime.indexes.save(index)
    click.echo(f"{collection.id}  {collection.name}  ({len(collection.documents)} documents, "
               f"{index.entry_count()} chunks)")


@main.command()
@click.argument("collection_ref")
@click.argument("query")
@click.option("--docs", multiple=True, help="Limit to these document ids or filenames.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--notebook", "notebook_id", default=None, help="Record the executed action into this notebook.")
@click.pass_context
def search(ctx, collection_ref, query, docs, as_json, notebook_id):
    """Search every scoped document; quoted queries are lexical (no LLM)."""
    runtime = _runtime(ctx)
    collection = runtime.collections.find(collection_ref)
    spec = ActionSpec(SEARCH_KIND, raw_query=query, scope=_resolve_docs(collection, docs))
    _run_action(ctx, runtime, collection, spec, as_json, notebook_id)


@main.command()
@click.argument("collection_ref")
@click.argument("question")
@click.option("--collection-mode", is_flag=True, help="Synthesize one answer over the collection.")
@click.option("--docs", multiple=True, help="Limit to these document ids or filenames.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--notebook", "notebook_id", default=None, help="Record the executed action into this notebook.")
@click.pass_context
def ask(ctx, collection_ref, question, collection_mode, docs, as_json, notebook_id):
    """Ask each document independently, or the whole collection with evidence."""
    runtime = _runtime(ctx)
    collection = runtime.collections.find(collection_ref)
    kind = ASK_COLLECTION_KIND if collection_mode else ASK_EACH_KIND
    spec = ActionSpec(kind, raw_query=question, scope=_resolve_docs(collection, docs))
    _run_action(ctx, runtime, collection, spec, as_json, notebook_id)


@main.command()
@click.argument("collection_ref")
@click.option("--dimensions", default=None, help="Dimensions the summaries should focus on.")
@click.option("--docs", multiple=True, help="Limit to these document ids or filenames.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--notebook", "notebook_id", default=None, help="Record the executed action into this notebook.")
@click.pass_context
def summarize(ctx, collection_ref, dimensions, docs, as_json, notebook_id):
    """Summarize every scoped document, optionally along given dimensions."""
    runtime = _runtime(ctx)
    collection = runtime.collections.find(collection_ref)
    spec = ActionSpec(
        SUMMARIZE_KIND, scope=_resolve_docs(collection, docs), dimensions=dimensions
    )
    _run_action(ctx, runtime, collection, spec, as_json, notebook_id)


@main.command()
@click.argument("collection_ref")
@click.option("--goal", default=None, help="Foraging goal for this notebook.")
@click.pass_context
def notebook(ctx, collection_ref, goal):
    """Create a notebook over a collection and print its id."""
    runtime = _runtime(ctx)
    collection = runtime.collections.find(collection_ref)
    nb = new_notebook(collection.id, goal=goal)
    runtime.notebooks.save(nb)
    click.echo(nb.id)


@main.command()
@click.argument("notebook_id")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def suggest(ctx, notebook_id, as_json):
    """Generate follow-up query suggestions for a notebook."""
    runtime = _runtime(ctx)
    nb = runtime.notebooks.load(notebook_id)
    collection = runtime.collections.find(nb.collection_id)
    suggestion_set = sugg.generate(runtime.gateway, collection, nb.goal, action_history(nb))

    def insert(notebook: Notebook) -> None:
        sugg.suggest_into(notebook, suggestion_set)

    if not suggestion_set.is_empty():
        runtime.notebooks.mutate(notebook_id, insert)
    if as_json:
        click.echo(json.dumps(suggestion_set.to_dict(), ensure_ascii=False))
    else:
        for s in suggestion_set.searches:
            click.echo(f"search:   {s}")
        for q in suggestion_set.questions:
            click.echo(f"question: {q}")
        if suggestion_set.is_empty():
            click.echo("(no suggestions)")


@main.command()
@click.argument("notebook_id")
@click.option("--csv", "csv_path", required=True, type=click.Path(path_type=Path), help="Output CSV path.")
@click.option("--columns", multiple=True, help="Column filter (labels).")
@click.option("--order", multiple=True, help="Column order (labels).")
@click.pass_context
def export(ctx, notebook_id, csv_path, columns, order):
    """Export a notebook's aggregate table view to CSV."""
    runtime = _runtime(ctx)
    nb = runtime.notebooks.load(notebook_id)
    collection = runtime.collections.find(nb.collection_id)
    table = agg.rebuild(nb, collection)
    projected = agg.view(table, list(columns) or None, list(order) or None)
    csv_path.write_bytes(agg.export_csv(projected))
    click.echo(f"wrote {csv_path} ({len(projected.rows)} rows, {len(projected.columns) + 1} columns)")


@main.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP service."""
    from .service import serve as run_service

    params = ctx.obj
    flags = {
        "data_dir": params.get("data_dir"),
        "mock": params.get("mock"),
        "mock_fixtures_dir": params.get("fixtures"),
        "host": host,
        "port": port,
    }
    run_service(load_config(flags=flags, config_file=params.get("config")))


if __name__ == "__main__":
    main()
