/** Typed client for the labeling service API. Network failures and HTTP
 * errors are returned as values so callers can render banners instead of
 * throwing mid-render. */

export interface SessionCounts {
  seed: number;
  auto: number;
  expert: number;
  pool_remaining: number;
  pending: number;
}

export interface SessionView {
  session_id: string;
  iteration: number;
  state: "running" | "awaiting_expert" | "complete" | "aborted";
  counts: SessionCounts;
  learner_accuracy: number | null;
  error?: string;
}

export interface PendingItem {
  record_id: string;
  text: string;
  score: number;
  p_spam: number;
  iteration: number;
}

export interface ProgressView {
  counts: SessionCounts;
  state: string;
  iteration: number;
  learner_accuracy: number | null;
  last_events: Array<Record<string, unknown>>;
  report: Record<string, number> | null;
}

export interface SessionConfig {
  seed_corpus: string;
  pool_corpus: string;
  batch_size?: number;
  threshold?: number;
  max_expert_per_iter?: number;
  seed?: number;
  svm_epochs?: number;
  eval_holdout_fraction?: number;
}

export type ApiResult<T> =
  | { ok: true; value: T }
  | { ok: false; kind: "network"; detail: string }
  | { ok: false; kind: "http"; status: number; detail: string };

export type LabelValue = "spam" | "ham";

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return typeof body?.error === "string" ? body.error : JSON.stringify(body);
  } catch {
    return resp.statusText;
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<ApiResult<T>> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, init);
    } catch (err) {
      return { ok: false, kind: "network", detail: String(err) };
    }
    if (!resp.ok) {
      return { ok: false, kind: "http", status: resp.status, detail: await errorDetail(resp) };
    }
    return { ok: true, value: (await resp.json()) as T };
  }

  getSession(): Promise<ApiResult<SessionView>> {
    return this.request("/api/v1/session");
  }

  getQueue(): Promise<ApiResult<PendingItem[]>> {
    return this.request("/api/v1/queue");
  }

  getProgress(): Promise<ApiResult<ProgressView>> {
    return this.request("/api/v1/progress");
  }

  startSession(config: SessionConfig): Promise<ApiResult<SessionView>> {
    return this.request("/api/v1/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  postLabel(recordId: string, label: LabelValue): Promise<ApiResult<{ status: string }>> {
    return this.request("/api/v1/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ record_id: recordId, label }),
    });
  }

  async exportText(): Promise<ApiResult<string>> {
    let resp: Response;
    try {
      resp = await fetch(this.base + "/api/v1/export");
    } catch (err) {
      return { ok: false, kind: "network", detail: String(err) };
    }
    if (!resp.ok) {
      return { ok: false, kind: "http", status: resp.status, detail: await errorDetail(resp) };
    }
    return { ok: true, value: await resp.text() };
  }

  exportUrl(): string {
    return this.base + "/api/v1/export";
  }
}
