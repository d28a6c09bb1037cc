// Thin typed client over the platform REST API. The bearer token lives in
// session memory only; a 401 raises UnauthorizedError so views can show the
// login prompt instead of silently failing.

import type {
  DecisionOptionPayload,
  ExplanationPayload,
  FeedbackBody,
  ForecastPayload,
  QueueItem,
  ScenarioPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export class UnauthorizedError extends ApiError {
  constructor(detail: string) {
    super(401, detail);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private token: string | null = null;

  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  get hasToken(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    const text = await response.text();
    if (response.status === 401) throw new UnauthorizedError(detailOf(text));
    if (!response.ok) throw new ApiError(response.status, detailOf(text));
    return JSON.parse(text) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  getForecast(forecastId: string): Promise<ForecastPayload> {
    return this.request("GET", `/forecasts/${forecastId}`);
  }

  requestForecast(seriesId: string, modelKey: string, asOf: string, horizon: number): Promise<ForecastPayload> {
    return this.request("POST", "/forecast", {
      series_id: seriesId,
      model_key: modelKey,
      as_of: asOf,
      horizon,
    });
  }

  explain(forecastId: string, seed = 0): Promise<ExplanationPayload> {
    return this.request("POST", "/explain", { forecast_id: forecastId, seed });
  }

  queue(seriesId?: string): Promise<{ items: QueueItem[] }> {
    const query = seriesId ? `?series_id=${encodeURIComponent(seriesId)}` : "";
    return this.request("GET", `/al/queue${query}`);
  }

  submitLabel(itemId: string, value: number): Promise<{ item_id: string; status: string }> {
    return this.request("POST", "/al/label", { item_id: itemId, value });
  }

  recommend(body: Record<string, unknown>): Promise<{ options: DecisionOptionPayload[] }> {
    return this.request("POST", "/recommend", body);
  }

  assessScenario(scenarioId: string): Promise<ScenarioPayload> {
    return this.request("POST", `/scenarios/${scenarioId}/assess`, {});
  }

  feedback(body: FeedbackBody): Promise<{ event_id: string }> {
    return this.request("POST", "/feedback", body);
  }
}

function detailOf(text: string): string {
  try {
    const parsed = JSON.parse(text) as { detail?: string };
    if (parsed.detail) return parsed.detail;
  } catch {
    /* non-JSON error body */
  }
  return text || "request failed";
}
