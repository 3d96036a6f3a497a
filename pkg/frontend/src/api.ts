// Thin typed client over the engine's HTTP API, including the NDJSON
// event stream. `fetchFn` is injectable so tests can interpose a
// network-mock layer that records every request.

import type {
  ActionEvent,
  AggregateTableData,
  CollectionSummary,
  DocumentPayload,
  NotebookData,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${path}: ${body}`);
    }
    return (await response.json()) as T;
  }

  getCollection(id: string): Promise<CollectionSummary> {
    return this.request(`/collections/${id}`);
  }

  getDocument(docId: string, span?: { start: number; end: number }): Promise<DocumentPayload> {
    const query = span ? `?start=${span.start}&end=${span.end}` : "";
    return this.request(`/documents/${docId}${query}`);
  }

  getNotebook(id: string): Promise<NotebookData> {
    return this.request(`/notebooks/${id}`);
  }

  createCell(
    notebookId: string,
    body: {
      kind: "text" | "action";
      content?: string;
      action_kind?: string;
      raw_query?: string;
      scope?: string[];
      dimensions?: string;
      position?: number;
    },
  ): Promise<{ cell_id: string; notebook: NotebookData }> {
    return this.request(`/notebooks/${notebookId}/cells`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  editResult(
    notebookId: string,
    cellId: string,
    body: { doc_id: string; column: string; new_text?: string; remove?: boolean },
  ): Promise<NotebookData> {
    return this.request(`/notebooks/${notebookId}/cells/${cellId}/edit`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  acceptSuggestion(
    notebookId: string,
    cellId: string,
    item: string,
    kind: "search" | "question",
  ): Promise<{ action_cell_id: string; notebook: NotebookData }> {
    return this.request(`/notebooks/${notebookId}/suggestions/${cellId}/accept`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ item, kind }),
    });
  }

  dismissSuggestion(notebookId: string, cellId: string): Promise<NotebookData> {
    return this.request(`/notebooks/${notebookId}/suggestions/${cellId}/dismiss`, {
      method: "POST",
    });
  }

  getTable(
    notebookId: string,
    params?: { columns?: string[]; order?: string[] },
  ): Promise<AggregateTableData> {
    return this.request(`/notebooks/${notebookId}/table${tableQuery(params)}`);
  }

  tableCsvUrl(notebookId: string, params?: { columns?: string[]; order?: string[] }): string {
    return `${this.baseUrl}/notebooks/${notebookId}/table.csv${tableQuery(params)}`;
  }

  /** Execute a cell, invoking `onEvent` for every NDJSON record as it arrives. */
  async executeCell(cellId: string, onEvent: (event: ActionEvent) => void): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/cells/${cellId}/execute`, {
      method: "POST",
    });
    if (!response.ok || !response.body) {
      throw new ApiError(response.status, `execute ${cellId} failed`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (value) {
        buffer += decoder.decode(value, { stream: true });
        let newline;
        while ((newline = buffer.indexOf("\n")) >= 0) {
          const line = buffer.slice(0, newline).trim();
          buffer = buffer.slice(newline + 1);
          if (line) onEvent(JSON.parse(line) as ActionEvent);
        }
      }
      if (done) break;
    }
    const tail = buffer.trim();
    if (tail) onEvent(JSON.parse(tail) as ActionEvent);
  }
}

function tableQuery(params?: { columns?: string[]; order?: string[] }): string {
  if (!params) return "";
  const search = new URLSearchParams();
  for (const column of params.columns ?? []) search.append("columns", column);
  for (const column of params.order ?? []) search.append("order", column);
  const rendered = search.toString();
  return rendered ? `?${rendered}` : "";
}
