// Wire types mirroring the service's JSON exactly. The UI never invents
// values: everything rendered comes from one of these payloads.

export type Span = [number, number];

export interface ResultCellData {
  text: string;
  spans: Span[];
  origin: "extracted" | "generated" | "error";
  edited: boolean;
  flags: string[];
}

export interface ResultTableData {
  columns: string[];
  doc_ids: string[];
  cells: Record<string, ResultCellData[]>;
}

export interface CollectionAnswerData {
  type?: string;
  answer: string;
  evidence: ResultTableData;
  attributes_used: { name: string; reused: boolean }[];
}

export interface ActionSpecData {
  kind: "Search" | "AskEach" | "AskCollection" | "Summarize";
  raw_query: string;
  scope: string[] | null;
  dimensions: string | null;
}

export interface CellData {
  id: string;
  kind: "text" | "action" | "suggestion";
  hidden: boolean;
  created_seq: number;
  content?: string;
  spec?: ActionSpecData;
  status?: "unexecuted" | "running" | "completed" | "failed";
  error?: string | null;
  result?: (ResultTableData & { type?: string }) | CollectionAnswerData | null;
  suggestions?: { searches: string[]; questions: string[]; created_after_cell: string | null };
  state?: "pending" | "accepted" | "dismissed";
}

export interface NotebookData {
  schema_version: number;
  id: string;
  collection_id: string;
  goal: string | null;
  cells: CellData[];
  visible_cell_ids: string[];
}

export interface CollectionSummary {
  id: string;
  name: string;
  goal: string | null;
  documents: { id: string; filename: string; chunk_count: number; pages: number | null }[];
}

export interface DocumentPayload {
  id: string;
  collection_id: string;
  filename: string;
  full_text: string;
  pages: { page: number; char_start: number; char_end: number }[] | null;
  span: { start: number; end: number; text: string; page: number | null } | null;
}

export interface ActionEvent {
  event: "ActionStarted" | "RowCompleted" | "PhaseChanged" | "ActionCompleted" | "ActionFailed";
  action_id: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface AggregateTableData {
  columns: { label: string; cell_id: string; source_column: string }[];
  rows: { doc_id: string; filename: string; cells: (ResultCellData | null)[] }[];
}

export function isCollectionAnswer(
  result: NonNullable<CellData["result"]>,
): result is CollectionAnswerData {
  return (result as CollectionAnswerData).attributes_used !== undefined;
}
