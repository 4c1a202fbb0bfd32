/** Thin typed client for the mvforge service. All state lives server-side;
 * the UI never computes scores or recommendations itself. */

import type {
  ChartRef,
  HistoryEntry,
  MVPayload,
  RecommendResponse,
  TableData,
  TableSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface UploadResponse extends TableSummary {
  session_id: string;
}

export interface SessionState {
  session_id: string;
  table: TableSummary;
  mv: MVPayload;
  history_length: number;
  consent: boolean;
}

export interface IdeasRequest {
  must_include: number[];
  drop_alternative_types: boolean;
  limit: number;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    const doc = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(response.status, doc.detail ?? doc.error ?? text);
    }
    return doc as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/api/health");
  }

  async uploadDataset(file: Blob, filename: string): Promise<UploadResponse> {
    const form = new FormData();
    form.append("file", file, filename);
    const response = await this.fetchFn(`${this.baseUrl}/api/datasets`, {
      method: "POST",
      body: form,
    });
    const doc = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, doc.detail ?? doc.error ?? "upload failed");
    }
    return doc as UploadResponse;
  }

  sessionState(sid: string): Promise<SessionState> {
    return this.request("GET", `/api/sessions/${sid}`);
  }

  data(sid: string): Promise<TableData> {
    return this.request("GET", `/api/sessions/${sid}/data`);
  }

  recommendMv(
    sid: string,
    nCharts: number,
    locked: ChartRef[],
    dedup: boolean,
  ): Promise<RecommendResponse> {
    return this.request("POST", `/api/sessions/${sid}/recommend-mv`, {
      n_charts: nCharts,
      locked,
      drop_alternative_types: dedup,
    });
  }

  chartIdeas(sid: string, body: IdeasRequest): Promise<{ ideas: import("./types.js").ChartIdea[] }> {
    return this.request("POST", `/api/sessions/${sid}/chart-ideas`, body);
  }

  addChart(
    sid: string,
    chart: ChartRef,
    options: { fromIdeas?: boolean; locked?: boolean } = {},
  ): Promise<{ mv: MVPayload; position: number }> {
    return this.request("POST", `/api/sessions/${sid}/charts`, {
      chart,
      from_ideas: options.fromIdeas ?? false,
      locked: options.locked ?? false,
    });
  }

  editChart(sid: string, position: number, patch: object): Promise<{ mv: MVPayload }> {
    return this.request("PATCH", `/api/sessions/${sid}/charts/${position}`, patch);
  }

  deleteChart(sid: string, position: number): Promise<{ mv: MVPayload }> {
    return this.request("DELETE", `/api/sessions/${sid}/charts/${position}`);
  }

  crossFilter(sid: string, payload: object): Promise<{ recorded: boolean }> {
    return this.request("POST", `/api/sessions/${sid}/cross-filter`, payload);
  }

  history(sid: string): Promise<{ history: HistoryEntry[] }> {
    return this.request("GET", `/api/sessions/${sid}/history`);
  }

  restore(sid: string, seq: number): Promise<{ mv: MVPayload }> {
    return this.request("POST", `/api/sessions/${sid}/restore`, { seq });
  }

  save(sid: string, consent: boolean): Promise<{ consent: boolean; stored: string | null }> {
    return this.request("POST", `/api/sessions/${sid}/save`, { consent });
  }
}
