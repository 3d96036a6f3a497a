// Document pane: extracted text rendered page by page with the linked span
// wrapped in a <mark>. The highlighted text is an exact slice of the
// document's full_text, so it matches the provenance span byte for byte.

import type { Api } from "./api.js";
import type { DocumentPayload } from "./types.js";

export interface HighlightSpan {
  start: number;
  end: number;
}

export async function renderDocumentView(
  container: HTMLElement,
  api: Api,
  docId: string,
  span?: HighlightSpan,
): Promise<DocumentPayload> {
  const doc = await api.getDocument(docId, span);
  container.replaceChildren();
  container.classList.add("document-view");

  const header = document.createElement("header");
  header.className = "document-header";
  header.textContent = doc.filename;
  container.appendChild(header);

  const blocks = doc.pages?.length
    ? doc.pages.map((p) => ({ label: `Page ${p.page}`, start: p.char_start, end: p.char_end }))
    : [{ label: "", start: 0, end: doc.full_text.length }];

  // Page blocks may not cover inter-page whitespace; extend each block to the
  // next block's start so every character (and any span) lands in exactly one.
  for (let i = 0; i < blocks.length; i++) {
    blocks[i].end = i + 1 < blocks.length ? blocks[i + 1].start : doc.full_text.length;
    if (i === 0) blocks[i].start = 0;
  }

  let firstMark: HTMLElement | null = null;
  for (const block of blocks) {
    if (block.label) {
      const separator = document.createElement("div");
      separator.className = "page-separator";
      separator.textContent = block.label;
      container.appendChild(separator);
    }
    const pre = document.createElement("pre");
    pre.className = "page-text";
    const text = doc.full_text.slice(block.start, block.end);
    if (span && span.start < block.end && span.end > block.start) {
      const from = Math.max(span.start, block.start) - block.start;
      const to = Math.min(span.end, block.end) - block.start;
      pre.appendChild(document.createTextNode(text.slice(0, from)));
      const mark = document.createElement("mark");
      mark.className = "span-highlight";
      mark.textContent = text.slice(from, to);
      pre.appendChild(mark);
      pre.appendChild(document.createTextNode(text.slice(to)));
      if (!firstMark) firstMark = mark;
    } else {
      pre.textContent = text;
    }
    container.appendChild(pre);
  }

  if (firstMark && typeof firstMark.scrollIntoView === "function") {
    firstMark.scrollIntoView({ block: "center" });
  }
  return doc;
}
