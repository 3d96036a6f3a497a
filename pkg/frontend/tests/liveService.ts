// Helpers shared by the live-service UI tests.

import { readFileSync } from "node:fs";
import { Api } from "../src/api.js";
import { META_PATH } from "./globalSetup.js";

export interface ServiceMeta {
  base_url: string;
  collection_id: string;
  notebook_id: string;
  action_cell_id: string;
  suggestion_cell_id: string;
  edited_doc_id: string;
}

export function serviceMeta(): ServiceMeta {
  return JSON.parse(readFileSync(META_PATH, "utf-8")) as ServiceMeta;
}

export function liveApi(): { api: Api; meta: ServiceMeta } {
  const meta = serviceMeta();
  return { api: new Api(meta.base_url), meta };
}

export function normalizeWs(text: string): string {
  return text.split(/\s+/).filter(Boolean).join(" ");
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
