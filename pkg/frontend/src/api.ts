/** Thin typed client for the rescheduling API. All state lives server
 * side; every call round-trips so the view never drifts from the engine. */

import type {
  DiffResponse,
  DisruptionEvent,
  Intervention,
  KpisResponse,
  RunResponse,
  SessionInfo,
  StepResponse,
  WorldResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly token?: string,
  ) {}

  private async request<T>(
    method: string,
    path: string,
    query?: Record<string, string | boolean>,
    body?: unknown,
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (query && Object.keys(query).length > 0) {
      const params = new URLSearchParams();
      for (const [key, value] of Object.entries(query)) {
        params.set(key, String(value));
      }
      url += `?${params.toString()}`;
    }
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(url, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // plain-text error body
      }
      throw new ApiError(response.status, detail);
    }
    return (text ? JSON.parse(text) : null) as T;
  }

  createSession(scenario: unknown): Promise<SessionInfo> {
    return this.request("POST", "/sessions", undefined, scenario);
  }

  getWorld(sessionId: string, sandbox = false): Promise<WorldResponse> {
    return this.request("GET", `/sessions/${sessionId}/world`, { sandbox });
  }

  postDisruptions(
    sessionId: string,
    events: DisruptionEvent[],
    options: { sandbox?: boolean; stepwise?: boolean } = {},
  ): Promise<RunResponse | StepResponse> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/disruptions`,
      { sandbox: options.sandbox ?? false, stepwise: options.stepwise ?? false },
      { events },
    );
  }

  postIntervention(
    sessionId: string,
    intervention: Intervention,
    sandbox = false,
  ): Promise<RunResponse> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/interventions`,
      { sandbox },
      intervention,
    );
  }

  step(sessionId: string): Promise<StepResponse> {
    return this.request("POST", `/sessions/${sessionId}/step`);
  }

  getKpis(sessionId: string, sandbox = false): Promise<KpisResponse> {
    return this.request("GET", `/sessions/${sessionId}/kpis`, { sandbox });
  }

  getDiff(sessionId: string, sandbox = false): Promise<DiffResponse> {
    return this.request("GET", `/sessions/${sessionId}/diff`, { sandbox });
  }

  async getTrace(sessionId: string, sandbox = false): Promise<string> {
    let url = `${this.baseUrl}/sessions/${sessionId}/trace?sandbox=${sandbox}`;
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(url, { method: "GET", headers });
    const text = await response.text();
    if (!response.ok) throw new ApiError(response.status, text);
    return text;
  }

  commitSandbox(sessionId: string): Promise<{ committed_ops: number }> {
    return this.request("POST", `/sessions/${sessionId}/sandbox/commit`);
  }

  discardSandbox(sessionId: string): Promise<{ discarded: boolean }> {
    return this.request("DELETE", `/sessions/${sessionId}/sandbox`);
  }

  getHistory(sessionId: string): Promise<{ history: unknown[] }> {
    return this.request("GET", `/sessions/${sessionId}/history`);
  }
}
