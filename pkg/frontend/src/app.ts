// Workspace composition: Document / Notebook / Table panes side by side.

import { Api } from "./api.js";
import { renderDocumentView } from "./documentView.js";
import { ViewLayout } from "./layout.js";
import { NotebookView } from "./notebookView.js";
import { TableView } from "./tableView.js";

export interface Workspace {
  layout: ViewLayout;
  notebookView: NotebookView;
  tableView: TableView;
  root: HTMLElement;
  documentPane: HTMLElement;
  notebookPane: HTMLElement;
  tablePane: HTMLElement;
  /** Resolves when the most recent document-pane render has finished. */
  whenDocumentRendered: () => Promise<void>;
}

export async function mountWorkspace(
  root: HTMLElement,
  api: Api,
  notebookId: string,
): Promise<Workspace> {
  root.classList.add("workspace");
  const documentPane = document.createElement("section");
  documentPane.className = "pane document-pane";
  const notebookPane = document.createElement("section");
  notebookPane.className = "pane notebook-pane";
  const tablePane = document.createElement("section");
  tablePane.className = "pane table-pane";
  root.append(documentPane, notebookPane, tablePane);

  const layout = new ViewLayout();
  const notebookView = new NotebookView(notebookPane, api, layout);
  const tableView = new TableView(tablePane, api, layout, notebookId, async () => {
    await notebookView.reload();
  });

  let documentRender: Promise<void> = Promise.resolve();
  const applyLayout = () => {
    documentPane.hidden = !layout.isOpen("document");
    notebookPane.hidden = !layout.isOpen("notebook");
    tablePane.hidden = !layout.isOpen("table");
    if (layout.activeDocument) {
      documentRender = renderDocumentView(
        documentPane,
        api,
        layout.activeDocument.docId,
        layout.activeDocument.span,
      ).then(() => undefined);
    }
  };
  layout.onChange = applyLayout;

  await notebookView.load(notebookId);
  applyLayout();
  return {
    layout,
    notebookView,
    tableView,
    root,
    documentPane,
    notebookPane,
    tablePane,
    whenDocumentRendered: () => documentRender,
  };
}

// Browser entry point: ?api=<base>&notebook=<id>
export async function bootFromLocation(): Promise<Workspace | null> {
  if (typeof window === "undefined" || !window.location) return null;
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8765";
  const notebookId = params.get("notebook");
  if (!notebookId) return null;
  const root = document.getElementById("app");
  if (!root) return null;
  return mountWorkspace(root, new Api(base), notebookId);
}
