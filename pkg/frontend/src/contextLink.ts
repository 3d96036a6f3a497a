// Context linking: a click on any document-grounded snippet opens the
// Document pane scrolled to the exact highlighted character range. Cells
// without spans (including edited cells, whose spans are cleared) show a
// transient "no source span" tooltip and navigate nowhere.

import type { ViewLayout } from "./layout.js";
import type { ResultCellData } from "./types.js";

export const NO_SPAN_TOOLTIP = "no source span";

export function linkableSpan(cell: ResultCellData): [number, number] | null {
  if (cell.edited || cell.spans.length === 0) return null;
  return cell.spans[0];
}

export function attachContextLink(
  element: HTMLElement,
  cell: ResultCellData,
  docId: string,
  layout: ViewLayout,
): void {
  element.dataset.docId = docId;
  const span = linkableSpan(cell);
  if (span) {
    element.classList.add("linkable");
    element.dataset.spanStart = String(span[0]);
    element.dataset.spanEnd = String(span[1]);
    element.addEventListener("click", () => {
      layout.openDocument({ docId, span: { start: span[0], end: span[1] } });
    });
  } else {
    element.classList.add("unlinkable");
    element.title = NO_SPAN_TOOLTIP;
    element.addEventListener("click", () => {
      showTooltip(element, NO_SPAN_TOOLTIP);
    });
  }
}

export function showTooltip(anchor: HTMLElement, message: string): void {
  const tooltip = document.createElement("div");
  tooltip.className = "tooltip";
  tooltip.textContent = message;
  anchor.appendChild(tooltip);
  setTimeout(() => tooltip.remove(), 1500);
}
