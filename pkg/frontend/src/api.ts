// Typed client for the labeling service HTTP API.

export interface SessionInfo {
  session_id: string;
  status: "running" | "waiting_feedback" | "finished" | "error";
  progress: { processed: number; total: number };
  gamma: number;
  feedback_mode: string;
  error: string | null;
}

export interface Candidate {
  class_name: string;
  fused_prob: number;
  zs_prob: number;
}

export interface PendingRequest {
  sample_id: string;
  asset_uri: string | null;
  topk: Candidate[];
  created_at: number;
}

export interface WindowEntry {
  start: number;
  end: number;
  acc: number | null;
  zs_acc: number | null;
}

export interface Metrics {
  summary: {
    n: number;
    overall_acc: number | null;
    zs_acc: number | null;
    last_half_acc: number | null;
    flagged_count: number;
    flagged_zs_acc: number | null;
    window: number;
    windows: WindowEntry[];
  };
  improvement_curve: { end: number; improvement: number }[];
  lambda: number;
  flagged_fraction: number;
  gamma: number;
}

export type SubmitResult = "ok" | "conflict" | "invalid";

export class HttpError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) throw new HttpError(resp.status, `GET ${url} -> ${resp.status}`);
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  listSessions(): Promise<SessionInfo[]> {
    return getJson(`${this.base}/api/v1/sessions`);
  }

  async pending(sessionId: string): Promise<PendingRequest | null> {
    const resp = await fetch(`${this.base}/api/v1/sessions/${sessionId}/pending`);
    if (resp.status === 204) return null;
    if (!resp.ok) throw new HttpError(resp.status, `pending -> ${resp.status}`);
    return (await resp.json()) as PendingRequest;
  }

  async submitLabel(sessionId: string, sampleId: string,
                    labelIndex: number): Promise<SubmitResult> {
    const resp = await fetch(`${this.base}/api/v1/sessions/${sessionId}/label`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ sample_id: sampleId, label_index: labelIndex }),
    });
    if (resp.status === 409) return "conflict";
    if (resp.status === 422) return "invalid";
    if (!resp.ok) throw new HttpError(resp.status, `label -> ${resp.status}`);
    return "ok";
  }

  metrics(sessionId: string): Promise<Metrics> {
    return getJson(`${this.base}/api/v1/sessions/${sessionId}/metrics`);
  }

  async classes(sessionId: string): Promise<string[]> {
    const body = await getJson<{ class_names: string[] }>(
      `${this.base}/api/v1/sessions/${sessionId}/classes`);
    return body.class_names;
  }
}
