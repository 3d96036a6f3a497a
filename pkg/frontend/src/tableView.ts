// Table pane: the overview table, one row per document. Column controls map
// directly onto the API's view parameters; exporting downloads the server's
// CSV for exactly the current projection. The affixed action input adds a
// column through the same create-and-execute path notebook cells use.

import type { Api } from "./api.js";
import { attachContextLink } from "./contextLink.js";
import type { ViewLayout } from "./layout.js";
import type { AggregateTableData } from "./types.js";

export class TableView {
  table: AggregateTableData | null = null;
  hiddenColumns = new Set<string>();
  order: string[] = [];
  /** Test hook: the URL the export button would download. */
  lastExportUrl: string | null = null;

  constructor(
    private container: HTMLElement,
    private api: Api,
    private layout: ViewLayout,
    private notebookId: string,
    private onColumnAdded: (() => Promise<void>) | null = null,
  ) {}

  viewParams(): { columns?: string[]; order?: string[] } {
    const params: { columns?: string[]; order?: string[] } = {};
    if (this.table && this.hiddenColumns.size > 0) {
      params.columns = this.allLabels().filter((label) => !this.hiddenColumns.has(label));
    }
    if (this.order.length > 0) params.order = [...this.order];
    return params;
  }

  private allLabels(): string[] {
    return (this.table?.columns ?? []).map((c) => c.label);
  }

  async refresh(): Promise<void> {
    // Fetch unprojected first so controls can list every column, then apply
    // the current projection server-side.
    const full = await this.api.getTable(this.notebookId);
    const labels = full.columns.map((c) => c.label);
    this.hiddenColumns = new Set([...this.hiddenColumns].filter((l) => labels.includes(l)));
    this.order = this.order.filter((l) => labels.includes(l) && !this.hiddenColumns.has(l));
    this.table = full;
    const projected = await this.api.getTable(this.notebookId, this.viewParams());
    this.render(projected, labels);
  }

  private render(projected: AggregateTableData, allLabels: string[]): void {
    this.container.replaceChildren();
    this.container.classList.add("table-view");

    const toolbar = document.createElement("div");
    toolbar.className = "table-toolbar";
    for (const label of allLabels) {
      const toggle = document.createElement("button");
      toggle.className = "column-toggle";
      toggle.dataset.column = label;
      toggle.textContent = this.hiddenColumns.has(label) ? `show ${label}` : `hide ${label}`;
      toggle.addEventListener("click", () => {
        if (this.hiddenColumns.has(label)) this.hiddenColumns.delete(label);
        else this.hiddenColumns.add(label);
        void this.refresh();
      });
      toolbar.appendChild(toggle);
    }
    const exportButton = document.createElement("a");
    exportButton.className = "export-csv";
    exportButton.textContent = "Export CSV";
    this.lastExportUrl = this.api.tableCsvUrl(this.notebookId, this.viewParams());
    exportButton.href = this.lastExportUrl;
    exportButton.setAttribute("download", "table.csv");
    toolbar.appendChild(exportButton);
    this.container.appendChild(toolbar);

    const table = document.createElement("table");
    table.className = "aggregate-table";
    const thead = document.createElement("thead");
    const headRow = document.createElement("tr");
    const first = document.createElement("th");
    first.textContent = "filename";
    headRow.appendChild(first);
    projected.columns.forEach((column, index) => {
      const th = document.createElement("th");
      th.dataset.column = column.label;
      const label = document.createElement("span");
      label.textContent = column.label;
      th.appendChild(label);
      const moveLeft = document.createElement("button");
      moveLeft.className = "move-left";
      moveLeft.textContent = "←";
      moveLeft.addEventListener("click", () => {
        this.moveColumn(projected, index, -1);
      });
      th.appendChild(moveLeft);
      headRow.appendChild(th);
    });
    thead.appendChild(headRow);
    table.appendChild(thead);

    const tbody = document.createElement("tbody");
    for (const row of projected.rows) {
      const tr = document.createElement("tr");
      tr.dataset.docId = row.doc_id;
      const name = document.createElement("td");
      name.className = "doc-name";
      name.textContent = row.filename;
      tr.appendChild(name);
      for (const cell of row.cells) {
        const td = document.createElement("td");
        if (cell === null) {
          td.className = "result-cell out-of-scope";
        } else {
          td.className = `result-cell origin-${cell.origin}`;
          if (cell.edited) td.classList.add("edited");
          td.textContent = cell.text;
          attachContextLink(td, cell, row.doc_id, this.layout);
        }
        tr.appendChild(td);
      }
      tbody.appendChild(tr);
    }
    table.appendChild(tbody);
    this.container.appendChild(table);

    this.container.appendChild(this.renderAffixedInput());
  }

  private moveColumn(projected: AggregateTableData, index: number, delta: number): void {
    const labels = projected.columns.map((c) => c.label);
    const target = index + delta;
    if (target < 0 || target >= labels.length) return;
    [labels[index], labels[target]] = [labels[target], labels[index]];
    this.order = labels;
    void this.refresh();
  }

  private renderAffixedInput(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "affixed-action";
    const input = document.createElement("input");
    input.className = "affixed-query";
    input.placeholder = "Add a column: search across every document…";
    const run = document.createElement("button");
    run.className = "affixed-run";
    run.textContent = "Add column";
    run.addEventListener("click", () => {
      void this.addColumn(input.value);
    });
    bar.append(input, run);
    return bar;
  }

  /** Affixed input: creates and executes a Search cell, then refreshes. */
  async addColumn(query: string): Promise<void> {
    if (!query.trim()) return;
    const created = await this.api.createCell(this.notebookId, {
      kind: "action",
      action_kind: "Search",
      raw_query: query,
    });
    await this.api.executeCell(created.cell_id, () => undefined);
    if (this.onColumnAdded) await this.onColumnAdded();
    await this.refresh();
  }
}
