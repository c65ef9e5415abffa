import { MetricsDoc, RunEvent, RunSnapshot, RunStatus, RunSummary } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ApiClientOptions {
  baseUrl?: string;
  fetchFn?: typeof fetch;
  token?: string | null;
  onTokenChange?: (token: string | null) => void;
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body; fall through
  }
  return `HTTP ${response.status}`;
}

export class ApiClient {
  readonly baseUrl: string;
  token: string | null;
  private fetchFn: typeof fetch;
  private onTokenChange?: (token: string | null) => void;

  constructor(options: ApiClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.token = options.token ?? null;
    this.fetchFn = options.fetchFn ?? fetch;
    this.onTokenChange = options.onTokenChange;
  }

  setToken(token: string | null): void {
    this.token = token;
    this.onTokenChange?.(token);
  }

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const headers: Record<string, string> = { ...(init.headers as Record<string, string>) };
    if (init.method === "POST") {
      headers["content-type"] = "application/json";
      if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response;
  }

  async listRuns(status?: RunStatus): Promise<RunSummary[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : "";
    const response = await this.request(`/v1/runs${suffix}`);
    return (await response.json()).runs;
  }

  async getRun(runId: string): Promise<RunSnapshot> {
    const response = await this.request(`/v1/runs/${encodeURIComponent(runId)}`);
    return response.json();
  }

  // The server long-polls: an empty batch means nothing happened inside its
  // poll window, not that the run is over.
  async getEvents(runId: string, since: number): Promise<RunEvent[]> {
    const response = await this.request(
      `/v1/runs/${encodeURIComponent(runId)}/events?since=${since}`,
    );
    return (await response.json()).events;
  }

  async startRun(query: string, overrides?: Record<string, unknown>): Promise<string> {
    const response = await this.request("/v1/runs", {
      method: "POST",
      body: JSON.stringify({ query, config_overrides: overrides ?? null }),
    });
    return (await response.json()).run_id;
  }

  async submitCaption(runId: string, caption: string): Promise<void> {
    await this.request(`/v1/runs/${encodeURIComponent(runId)}/caption`, {
      method: "POST",
      body: JSON.stringify({ caption }),
    });
  }

  async submitVerdict(runId: string, success: boolean): Promise<void> {
    await this.request(`/v1/runs/${encodeURIComponent(runId)}/verdict`, {
      method: "POST",
      body: JSON.stringify({ success }),
    });
  }

  artifactUrl(runId: string, name: string): string {
    return `${this.baseUrl}/v1/runs/${encodeURIComponent(runId)}/artifacts/${name}`;
  }

  // null when no report has been published yet.
  async getMetrics(path = "/reports/metrics.json"): Promise<MetricsDoc | null> {
    try {
      const response = await this.request(path);
      return await response.json();
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) return null;
      throw error;
    }
  }
}
