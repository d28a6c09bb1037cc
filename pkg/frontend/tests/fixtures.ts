// Shared fixtures and a recording fetch stub for unit tests.

import type {
  DecisionOptionPayload,
  ExplanationPayload,
  ForecastCardModel,
  ForecastPayload,
  QueueItem,
} from "../src/types.js";

export function forecastPayload(overrides: Partial<ForecastPayload> = {}): ForecastPayload {
  return {
    forecast_id: "fc-000001",
    series_id: "S1",
    as_of: "2026-05-04",
    horizon: 3,
    model_key: "ridge_lags",
    model_version: 1,
    point: [10, 11, 12],
    lower: [8, 9, 10],
    upper: [12, 13, 14],
    coverage: 0.9,
    created_at: "",
    trust_warning: null,
    ...overrides,
  };
}

export function explanationPayload(overrides: Partial<ExplanationPayload> = {}): ExplanationPayload {
  return {
    explanation_id: "ex-000001",
    forecast_id: "fc-000001",
    attributions: [
      { feature: "lag_7", weight: 2.0 },
      { feature: "redacted" },
      { feature: "lag_1", weight: -1.0 },
      { feature: "dow", weight: 0.2 },
      { feature: "month", weight: 0.1 },
      { feature: "redacted" },
    ],
    intercept: 0.5,
    fidelity_r2: 0.99,
    kernel_sigma: 1.5,
    n_samples: 1000,
    seed: 0,
    ...overrides,
  };
}

export function optionPayload(rank: number): DecisionOptionPayload {
  return {
    option_id: `fc-000001:truck:d0:q${rank}`,
    mode: "truck",
    ship_day: 0,
    quantity: rank * 5,
    expected_cost: rank * 10,
    rank,
    directive_text: rank === 1 ? "Demand outlook driven by lag_7 (+); option minimizes expected cost 10.00" : `Option expected cost ${rank * 10}.00`,
    risk_flags: [],
  };
}

export function cardModel(overrides: Partial<ForecastCardModel> = {}): ForecastCardModel {
  return {
    history: [
      { date: "2026-05-01", value: 9 },
      { date: "2026-05-02", value: 10 },
      { date: "2026-05-03", value: 11 },
    ],
    forecast: forecastPayload(),
    explanation: explanationPayload(),
    options: [optionPayload(1), optionPayload(2)],
    riskFlags: ["scenario:sc-000001:novel"],
    ...overrides,
  };
}

export function queueItems(): QueueItem[] {
  return [
    { item_id: "S1:2026-04-01", series_id: "S1", date: "2026-04-01", score: 1.5, strategy: "ensemble_std", status: "pending" },
    { item_id: "S1:2026-04-09", series_id: "S1", date: "2026-04-09", score: 3.2, strategy: "ensemble_std", status: "pending" },
  ];
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/** Fetch stub: records calls and replies per-path (default 200 {}). */
export function recordingFetch(
  replies: Record<string, { status?: number; body?: unknown }> = {},
) {
  const calls: RecordedCall[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    calls.push({
      url: path,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const reply = replies[path] ?? {};
    return new Response(JSON.stringify(reply.body ?? {}), {
      status: reply.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetchFn };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
