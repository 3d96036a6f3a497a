// Pane layout state. Invariant: the notebook or the table pane is always
// open; the document pane opens on demand next to whichever is active.

export type Pane = "document" | "notebook" | "table";

export interface DocumentTarget {
  docId: string;
  span?: { start: number; end: number };
}

export class ViewLayout {
  private open = new Set<Pane>(["notebook"]);
  activeDocument: DocumentTarget | null = null;
  onChange: (() => void) | null = null;

  panes(): Pane[] {
    const order: Pane[] = ["document", "notebook", "table"];
    return order.filter((pane) => this.open.has(pane));
  }

  isOpen(pane: Pane): boolean {
    return this.open.has(pane);
  }

  openDocument(target: DocumentTarget): void {
    this.activeDocument = target;
    this.open.add("document");
    this.notify();
  }

  closeDocument(): void {
    this.activeDocument = null;
    this.open.delete("document");
    this.notify();
  }

  showTable(show: boolean): void {
    if (show) {
      this.open.add("table");
    } else {
      this.open.delete("table");
      this.open.add("notebook"); // never drop both primary panes
    }
    this.notify();
  }

  showNotebook(show: boolean): void {
    if (show) {
      this.open.add("notebook");
    } else if (this.open.has("table")) {
      this.open.delete("notebook");
    }
    this.notify();
  }

  private notify(): void {
    if (this.onChange) this.onChange();
  }
}
