"""Table View: rebuild purity, projection, and CSV export round-trips."""

import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docforager.aggregate import (
    FILENAME_HEADER,
    AggregateRow,
    AggregateTable,
    existing_columns,
    export_csv,
    rebuild,
    view,
)
from docforager.engine import (
    ASK_COLLECTION_KIND,
    SEARCH_KIND,
    ActionSpec,
    AttributeUse,
    CollectionAnswer,
    ResultCell,
    ResultTable,
)
from docforager.errors import UnknownColumn
from docforager.notebook import (
    STATUS_COMPLETED,
    create_action_cell,
    create_text_cell,
    mutate_cell,
    new_notebook,
)


def parse_csv(data: bytes) -> list[list[str]]:
    """Independent parser: stdlib csv against our hand-rolled writer."""
    return list(csv.reader(io.StringIO(data.decode("utf-8"), newline="")))


def table_for(collection, columns, doc_ids=None):
    doc_ids = doc_ids or [d.id for d in collection.documents]
    return ResultTable(
        columns=list(columns),
        doc_ids=list(doc_ids),
        cells={
            d: [ResultCell(text=f"{c} in {d}", origin="extracted") for c in columns]
            for d in doc_ids
        },
    )


def executed(nb, collection, query, columns, doc_ids=None):
    cell = create_action_cell(nb, ActionSpec(SEARCH_KIND, query))
    cell.result = table_for(collection, columns, doc_ids)
    cell.status = STATUS_COMPLETED
    return cell


class TestRebuild:
    def test_three_queries_over_ten_contracts(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "fees, termination clauses", ["fees", "termination clauses"])
        executed(nb, contracts, "services", ["services"])
        table = rebuild(nb, contracts)
        assert len(table.rows) == 10
        assert table.labels() == ["fees", "termination clauses", "services"]

    def test_empty_notebook_rows_with_filename_only(self, contracts):
        table = rebuild(new_notebook(contracts.id), contracts)
        assert table.columns == []
        assert [r.filename for r in table.rows] == [d.filename for d in contracts.documents]

    def test_scoped_action_leaves_empty_cells(self, contracts):
        nb = new_notebook(contracts.id)
        scoped = [d.id for d in contracts.documents[:2]]
        executed(nb, contracts, "fees", ["fees"], doc_ids=scoped)
        table = rebuild(nb, contracts)
        filled = [r for r in table.rows if r.cells[0] is not None]
        empty = [r for r in table.rows if r.cells[0] is None]
        assert len(filled) == 2 and len(empty) == 8

    def test_deleted_cells_drop_columns(self, contracts):
        nb = new_notebook(contracts.id)
        cell = executed(nb, contracts, "fees", ["fees"])
        assert rebuild(nb, contracts).labels() == ["fees"]
        mutate_cell(nb, "delete", cell_id=cell.id)
        assert rebuild(nb, contracts).labels() == []

    def test_unexecuted_and_text_cells_ignored(self, contracts):
        nb = new_notebook(contracts.id)
        create_text_cell(nb, "notes")
        create_action_cell(nb, ActionSpec(SEARCH_KIND, "pending"))
        assert rebuild(nb, contracts).labels() == []

    def test_collection_answer_contributes_evidence_not_answer(self, contracts):
        nb = new_notebook(contracts.id)
        cell = create_action_cell(nb, ActionSpec(ASK_COLLECTION_KIND, "Which?"))
        cell.result = CollectionAnswer(
            answer="Provider 3.",
            evidence=table_for(contracts, ["coverage"]),
            attributes_used=[AttributeUse("coverage", False)],
        )
        cell.status = STATUS_COMPLETED
        table = rebuild(nb, contracts)
        assert table.labels() == ["coverage"]

    def test_duplicate_labels_suffixed(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "fees", ["fees"])
        executed(nb, contracts, "fees", ["fees"])
        executed(nb, contracts, "fees", ["fees"])
        assert rebuild(nb, contracts).labels() == ["fees", "fees (2)", "fees (3)"]

    def test_query_literally_named_filename_suffixed(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "filename", ["filename"])
        assert rebuild(nb, contracts).labels() == ["filename (2)"]

    def test_rebuild_idempotent(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "fees", ["fees"])
        assert rebuild(nb, contracts).to_dict() == rebuild(nb, contracts).to_dict()

    def test_edited_cells_show_through(self, contracts):
        from docforager.notebook import edit_result

        nb = new_notebook(contracts.id)
        cell = executed(nb, contracts, "fees", ["fees"])
        doc = contracts.documents[0]
        edit_result(nb, cell.id, doc.id, "fees", new_text="hand-corrected")
        table = rebuild(nb, contracts)
        assert table.rows[0].cells[0].text == "hand-corrected"
        assert table.rows[0].cells[0].edited


class TestView:
    def _table(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "a", ["a"])
        executed(nb, contracts, "b", ["b"])
        executed(nb, contracts, "c", ["c"])
        return rebuild(nb, contracts)

    def test_identity(self, contracts):
        table = self._table(contracts)
        projected = view(table)
        assert projected.labels() == table.labels()
        assert table.labels() == ["a", "b", "c"]  # source unchanged

    def test_filter_to_one_column(self, contracts):
        projected = view(self._table(contracts), column_filter=["b"])
        assert projected.labels() == ["b"]
        assert len(projected.rows[0].cells) == 1

    def test_reorder(self, contracts):
        projected = view(self._table(contracts), column_order=["c", "a"])
        assert projected.labels() == ["c", "a", "b"]

    def test_filter_then_order(self, contracts):
        projected = view(self._table(contracts), column_filter=["a", "c"], column_order=["c"])
        assert projected.labels() == ["c", "a"]

    def test_unknown_column(self, contracts):
        with pytest.raises(UnknownColumn):
            view(self._table(contracts), column_filter=["ghost"])

    def test_order_referencing_filtered_out_column(self, contracts):
        with pytest.raises(UnknownColumn):
            view(self._table(contracts), column_filter=["a"], column_order=["b"])


class TestExportCsv:
    def test_header_and_line_count(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "q", ["q1", "q2", "q3"])
        data = export_csv(rebuild(nb, contracts))
        lines = data.decode("utf-8").split("\r\n")
        assert lines[-1] == ""  # trailing CRLF
        assert len(lines) == 12  # header + 10 rows + terminator
        assert lines[0] == "filename,q1,q2,q3"

    def test_comma_field_quoted(self):
        table = AggregateTable(
            columns=[],
            rows=[AggregateRow("d", "a.txt", [])],
        )
        from docforager.aggregate import _csv_field

        assert _csv_field("Net 30, invoiced") == '"Net 30, invoiced"'
        assert _csv_field("plain") == "plain"
        assert _csv_field('say "hi"') == '"say ""hi"""'

    def test_round_trip_adversarial_cells(self, contracts):
        nb = new_notebook(contracts.id)
        cell = executed(nb, contracts, "adversarial", ["adv"])
        nasty = [
            'comma, inside',
            'quote " inside',
            "newline\ninside",
            "crlf\r\ninside",
            "both, \"and\"\nmore",
            "— not found —",
            "",
            "trailing space ",
        ]
        table = cell.result
        for doc, text in zip(contracts.documents, nasty):
            table.cells[doc.id][0].text = text
        agg = rebuild(nb, contracts)
        parsed = parse_csv(export_csv(agg))
        assert parsed[0] == [FILENAME_HEADER, "adv"]
        for row, doc in zip(parsed[1:], contracts.documents):
            expected = agg.rows[[d.id for d in contracts.documents].index(doc.id)]
            assert row[0] == doc.filename
            assert row[1] == (expected.cells[0].text if expected.cells[0] else "")

    def test_reorder_then_export_matches_view_order(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "a", ["a"])
        executed(nb, contracts, "b", ["b"])
        projected = view(rebuild(nb, contracts), column_order=["b", "a"])
        parsed = parse_csv(export_csv(projected))
        assert parsed[0] == [FILENAME_HEADER, "b", "a"]

    @given(
        st.lists(
            st.text(
                # csv.reader cannot read NUL; everything else must round-trip.
                alphabet=st.characters(blacklist_categories=["Cs"], blacklist_characters="\x00"),
                max_size=30,
            ),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=150)
    def test_round_trip_property(self, texts):
        rows = [
            AggregateRow(f"d{i}", f"f{i}.txt", [ResultCell(text=t)]) for i, t in enumerate(texts)
        ]
        from docforager.aggregate import AggregateColumn

        table = AggregateTable(columns=[AggregateColumn("col", "cell", "col")], rows=rows)
        parsed = parse_csv(export_csv(table))
        assert parsed[0] == [FILENAME_HEADER, "col"]
        for row, original in zip(parsed[1:], texts):
            assert row[1] == original


class TestExistingColumns:
    def test_adapts_for_reuse(self, contracts):
        nb = new_notebook(contracts.id)
        executed(nb, contracts, "fees", ["fees"], doc_ids=[contracts.documents[0].id])
        cols = existing_columns(rebuild(nb, contracts))
        assert [c.name for c in cols] == ["fees"]
        assert set(cols[0].cells) == {contracts.documents[0].id}
