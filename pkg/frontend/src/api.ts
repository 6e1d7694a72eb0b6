// Thin REST client over the control service. fetch is injectable so the
// tests can run without a server.

import type {
  CompareResponse,
  FieldError,
  MetricsResponse,
  RunHandle,
  ScenarioPayload,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public fieldErrors: FieldError[] = [],
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "http://127.0.0.1:8000",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const errors: FieldError[] = Array.isArray(body.errors) ? body.errors : [];
      const detail = typeof body.detail === "string" ? body.detail : response.statusText;
      throw new ApiError(response.status, detail, errors);
    }
    return body as T;
  }

  postScenario(payload: ScenarioPayload): Promise<{ id: string; hash: string }> {
    return this.request("/scenarios", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getScenario(id: string): Promise<ScenarioPayload> {
    return this.request(`/scenarios/${id}`);
  }

  startRun(scenarioId: string, seed?: number, replications = 1): Promise<RunHandle> {
    return this.request("/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scenario_id: scenarioId, seed, replications }),
    });
  }

  getRun(runId: string): Promise<RunHandle> {
    return this.request(`/runs/${runId}`);
  }

  listRuns(): Promise<{ runs: RunHandle[] }> {
    return this.request("/runs");
  }

  getMetrics(runId: string, fromTick: number): Promise<MetricsResponse> {
    return this.request(`/runs/${runId}/metrics?from_tick=${fromTick}`);
  }

  getCompare(a: string, b: string): Promise<CompareResponse> {
    return this.request(`/compare?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`);
  }

  cancelRun(runId: string): Promise<RunHandle> {
    return this.request(`/runs/${runId}`, { method: "DELETE" });
  }
}
