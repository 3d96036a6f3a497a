// Notebook pane: the ordered cell list. Empty text cells take slash commands
// that open the three-action menu; action cells execute over the event
// stream and fill their result tables row by row; suggestion cells accept
// into pre-populated action cells or dismiss away.
//
// The view renders exclusively from API payloads. It never synthesizes,
// rewrites, or re-ranks a value on its own.

import type { Api } from "./api.js";
import { attachContextLink } from "./contextLink.js";
import type { ViewLayout } from "./layout.js";
import {
  isCollectionAnswer,
  type ActionEvent,
  type CellData,
  type CollectionSummary,
  type NotebookData,
  type ResultCellData,
  type ResultTableData,
} from "./types.js";

export const SLASH_ACTIONS = ["Search", "Ask", "Summarize"] as const;

interface ActionDraft {
  menu: (typeof SLASH_ACTIONS)[number];
  query: string;
  collectionMode: boolean;
  dimensions: string;
}

export class NotebookView {
  notebook: NotebookData | null = null;
  collection: CollectionSummary | null = null;
  /** Test hook: observe DOM state after each streamed event. */
  onActionEvent: ((cellId: string, event: ActionEvent) => void) | null = null;

  constructor(
    private container: HTMLElement,
    private api: Api,
    private layout: ViewLayout,
  ) {}

  async load(notebookId: string): Promise<void> {
    this.notebook = await this.api.getNotebook(notebookId);
    this.collection = await this.api.getCollection(this.notebook.collection_id);
    this.render();
  }

  async reload(): Promise<void> {
    if (this.notebook) await this.load(this.notebook.id);
  }

  filename(docId: string): string {
    const doc = this.collection?.documents.find((d) => d.id === docId);
    return doc ? doc.filename : docId;
  }

  render(): void {
    if (!this.notebook) return;
    this.container.replaceChildren();
    this.container.classList.add("notebook-view");
    const visible = new Set(this.notebook.visible_cell_ids);
    for (const cell of this.notebook.cells) {
      if (!visible.has(cell.id)) continue;
      this.container.appendChild(this.renderCell(cell));
    }
    this.container.appendChild(this.renderDraftCell());
  }

  private renderCell(cell: CellData): HTMLElement {
    switch (cell.kind) {
      case "text":
        return this.renderTextCell(cell);
      case "action":
        return this.renderActionCell(cell);
      default:
        return this.renderSuggestionCell(cell);
    }
  }

  // --- text cells and the slash command ---

  private renderTextCell(cell: CellData): HTMLElement {
    const element = document.createElement("div");
    element.className = "cell text-cell";
    element.dataset.cellId = cell.id;
    const editor = document.createElement("div");
    editor.className = "text-editor";
    editor.contentEditable = "true";
    editor.textContent = cell.content ?? "";
    this.wireSlashMenu(element, editor);
    element.appendChild(editor);
    return element;
  }

  private renderDraftCell(): HTMLElement {
    const element = document.createElement("div");
    element.className = "cell text-cell draft-cell";
    const editor = document.createElement("div");
    editor.className = "text-editor";
    editor.contentEditable = "true";
    editor.dataset.placeholder = "Type '/' for actions…";
    this.wireSlashMenu(element, editor);
    element.appendChild(editor);
    return element;
  }

  private wireSlashMenu(cellElement: HTMLElement, editor: HTMLElement): void {
    editor.addEventListener("keydown", (event) => {
      const key = (event as KeyboardEvent).key;
      if (key === "/" && (editor.textContent ?? "").trim() === "") {
        event.preventDefault();
        this.openSlashMenu(cellElement);
      }
    });
  }

  private openSlashMenu(cellElement: HTMLElement): void {
    cellElement.querySelector(".slash-menu")?.remove();
    const menu = document.createElement("div");
    menu.className = "slash-menu";
    for (const action of SLASH_ACTIONS) {
      const item = document.createElement("button");
      item.className = "slash-item";
      item.textContent = action;
      item.addEventListener("click", () => {
        menu.remove();
        this.openActionEditor(cellElement, action);
      });
      menu.appendChild(item);
    }
    cellElement.appendChild(menu);
  }

  private openActionEditor(cellElement: HTMLElement, menu: ActionDraft["menu"]): void {
    const form = document.createElement("div");
    form.className = "action-editor";
    form.dataset.menu = menu;

    const query = document.createElement("input");
    query.className = "action-query";
    query.placeholder =
      menu === "Search"
        ? 'comma-separated queries; "quotes" for exact match'
        : menu === "Ask"
          ? "question for your documents"
          : "dimensions to focus on (optional)";
    form.appendChild(query);

    let collectionToggle: HTMLInputElement | null = null;
    if (menu === "Ask") {
      const label = document.createElement("label");
      label.className = "collection-toggle";
      collectionToggle = document.createElement("input");
      collectionToggle.type = "checkbox";
      label.append(collectionToggle, document.createTextNode(" my collection"));
      form.appendChild(label);
    }

    const run = document.createElement("button");
    run.className = "action-run";
    run.textContent = "Run";
    run.addEventListener("click", () => {
      const draft: ActionDraft = {
        menu,
        query: query.value,
        collectionMode: collectionToggle?.checked ?? false,
        dimensions: menu === "Summarize" ? query.value : "",
      };
      void this.submitAction(draft);
    });
    form.appendChild(run);
    cellElement.appendChild(form);
    query.focus();
  }

  private async submitAction(draft: ActionDraft): Promise<void> {
    if (!this.notebook) return;
    const actionKind =
      draft.menu === "Search"
        ? "Search"
        : draft.menu === "Ask"
          ? draft.collectionMode
            ? "AskCollection"
            : "AskEach"
          : "Summarize";
    const created = await this.api.createCell(this.notebook.id, {
      kind: "action",
      action_kind: actionKind,
      raw_query: draft.menu === "Summarize" ? "" : draft.query,
      ...(draft.menu === "Summarize" && draft.dimensions
        ? { dimensions: draft.dimensions }
        : {}),
    });
    this.notebook = created.notebook;
    this.collection = await this.api.getCollection(this.notebook.collection_id);
    this.render();
    await this.runAction(created.cell_id);
  }

  // --- action cells ---

  private renderActionCell(cell: CellData): HTMLElement {
    const element = document.createElement("div");
    element.className = `cell action-cell status-${cell.status ?? "unexecuted"}`;
    element.dataset.cellId = cell.id;

    const header = document.createElement("header");
    header.className = "action-header";
    const kind = document.createElement("span");
    kind.className = "action-kind";
    kind.textContent = labelFor(cell.spec?.kind ?? "Search");
    const query = document.createElement("span");
    query.className = "action-query-display";
    query.textContent = cell.spec?.kind === "Summarize"
      ? cell.spec?.dimensions ?? ""
      : cell.spec?.raw_query ?? "";
    header.append(kind, query);

    if (cell.status === "unexecuted" || cell.status === "failed") {
      const run = document.createElement("button");
      run.className = "action-run";
      run.textContent = cell.status === "failed" ? "Retry" : "Run";
      run.addEventListener("click", () => void this.runAction(cell.id));
      header.appendChild(run);
    }
    element.appendChild(header);

    if (cell.error) {
      const error = document.createElement("div");
      error.className = "action-error";
      error.textContent = cell.error;
      element.appendChild(error);
    }

    const body = document.createElement("div");
    body.className = "action-body";
    element.appendChild(body);
    if (cell.result) {
      if (isCollectionAnswer(cell.result)) {
        const answer = document.createElement("p");
        answer.className = "collection-answer";
        answer.textContent = cell.result.answer;
        body.appendChild(answer);
        body.appendChild(this.renderResultTable(cell, cell.result.evidence));
      } else {
        body.appendChild(this.renderResultTable(cell, cell.result));
      }
    }
    return element;
  }

  private renderResultTable(cell: CellData, data: ResultTableData): HTMLTableElement {
    const table = document.createElement("table");
    table.className = "result-table";
    table.appendChild(resultHeader(data.columns));
    const body = document.createElement("tbody");
    for (const docId of data.doc_ids) {
      const row = data.cells[docId];
      if (row) body.appendChild(this.resultRow(cell.id, docId, row));
    }
    table.appendChild(body);
    return table;
  }

  private resultRow(cellId: string, docId: string, cells: ResultCellData[]): HTMLTableRowElement {
    const tr = document.createElement("tr");
    tr.dataset.docId = docId;
    const name = document.createElement("td");
    name.className = "doc-name";
    name.textContent = this.filename(docId);
    tr.appendChild(name);
    for (const [column, cellData] of cells.entries()) {
      const td = document.createElement("td");
      td.className = `result-cell origin-${cellData.origin}`;
      td.dataset.column = String(column);
      if (cellData.edited) td.classList.add("edited");
      const text = document.createElement("span");
      text.className = "cell-text";
      text.textContent = cellData.text;
      if (cellData.origin === "extracted" && cellData.spans.length > 0) {
        const glyph = document.createElement("span");
        glyph.className = "quote-glyph";
        glyph.textContent = "❝ "; // extracted = verbatim quote treatment
        td.appendChild(glyph);
      } else if (cellData.origin === "generated") {
        const badge = document.createElement("span");
        badge.className = "generated-badge";
        badge.textContent = "generated";
        td.appendChild(badge);
      }
      td.appendChild(text);
      attachContextLink(td, cellData, docId, this.layout);
      tr.appendChild(td);
    }
    return tr;
  }

  /** Execute an action cell, filling its result table as rows arrive. */
  async runAction(cellId: string): Promise<void> {
    const cellElement = this.container.querySelector<HTMLElement>(
      `[data-cell-id="${cellId}"]`,
    );
    if (!cellElement) return;
    cellElement.classList.remove("status-unexecuted", "status-failed");
    cellElement.classList.add("status-running");
    const body = cellElement.querySelector(".action-body") ?? cellElement;
    body.replaceChildren();

    let streamTable: HTMLTableElement | null = null;
    let streamBody: HTMLTableSectionElement | null = null;
    try {
      await this.api.executeCell(cellId, (event) => {
        if (event.event === "ActionStarted") {
          const columns = (event.payload.columns as string[]) ?? [];
          streamTable = document.createElement("table");
          streamTable.className = "result-table streaming";
          streamTable.appendChild(resultHeader(columns));
          streamBody = document.createElement("tbody");
          streamTable.appendChild(streamBody);
          body.appendChild(streamTable);
        } else if (event.event === "RowCompleted" && streamBody) {
          const docId = event.payload.doc_id as string;
          const cells = (event.payload.cells as ResultCellData[]) ?? [];
          streamBody.appendChild(this.resultRow(cellId, docId, cells));
        } else if (event.event === "PhaseChanged") {
          const phase = document.createElement("div");
          phase.className = "phase-indicator";
          phase.textContent = String(event.payload.phase ?? "");
          body.appendChild(phase);
        }
        if (this.onActionEvent) this.onActionEvent(cellId, event);
      });
    } finally {
      // The persisted notebook is authoritative once the stream ends.
      await this.reload();
    }
  }

  // --- suggestion cells ---

  private renderSuggestionCell(cell: CellData): HTMLElement {
    const element = document.createElement("div");
    element.className = "cell suggestion-cell";
    element.dataset.cellId = cell.id;
    const header = document.createElement("header");
    header.className = "suggestion-header";
    header.textContent = "Suggested next steps";
    element.appendChild(header);

    const list = document.createElement("ul");
    list.className = "suggestion-list";
    const suggestions = cell.suggestions ?? { searches: [], questions: [] };
    const entries: [string, "search" | "question"][] = [
      ...suggestions.searches.map((s): [string, "search"] => [s, "search"]),
      ...suggestions.questions.map((q): [string, "question"] => [q, "question"]),
    ];
    for (const [item, kind] of entries) {
      const li = document.createElement("li");
      li.className = `suggestion-item kind-${kind}`;
      const label = document.createElement("span");
      label.textContent = item;
      const acceptButton = document.createElement("button");
      acceptButton.className = "suggestion-accept";
      acceptButton.textContent = "Accept";
      acceptButton.addEventListener("click", () => {
        void this.acceptSuggestion(cell.id, item, kind);
      });
      li.append(label, acceptButton);
      list.appendChild(li);
    }
    element.appendChild(list);

    const dismissButton = document.createElement("button");
    dismissButton.className = "suggestion-dismiss";
    dismissButton.textContent = "Dismiss";
    dismissButton.addEventListener("click", () => {
      void this.dismissSuggestion(cell.id);
    });
    element.appendChild(dismissButton);
    return element;
  }

  async acceptSuggestion(cellId: string, item: string, kind: "search" | "question"): Promise<string> {
    if (!this.notebook) throw new Error("notebook not loaded");
    const result = await this.api.acceptSuggestion(this.notebook.id, cellId, item, kind);
    this.notebook = result.notebook;
    this.render();
    return result.action_cell_id;
  }

  async dismissSuggestion(cellId: string): Promise<void> {
    if (!this.notebook) return;
    this.notebook = await this.api.dismissSuggestion(this.notebook.id, cellId);
    this.render();
  }
}

function labelFor(kind: string): string {
  switch (kind) {
    case "AskEach":
      return "Ask [Each Document]";
    case "AskCollection":
      return "Ask [My Collection]";
    default:
      return kind;
  }
}

function resultHeader(columns: string[]): HTMLTableSectionElement {
  const thead = document.createElement("thead");
  const tr = document.createElement("tr");
  const first = document.createElement("th");
  first.textContent = "Document";
  tr.appendChild(first);
  for (const column of columns) {
    const th = document.createElement("th");
    th.textContent = column;
    tr.appendChild(th);
  }
  thead.appendChild(tr);
  return thead;
}
