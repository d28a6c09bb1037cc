// Wire payload shapes, mirroring the platform API responses.

export interface ForecastPayload {
  forecast_id: string;
  series_id: string;
  as_of: string;
  horizon: number;
  model_key: string;
  model_version: number;
  point: number[];
  lower: number[];
  upper: number[];
  coverage: number;
  created_at: string;
  trust_warning: { detector: string; score: number; message: string } | null;
}

/** A redacted attribution carries no name and no weight. */
export interface AttributionEntry {
  feature: string;
  weight?: number;
}

export interface ExplanationPayload {
  explanation_id: string;
  forecast_id: string;
  attributions: AttributionEntry[];
  intercept: number;
  fidelity_r2: number;
  kernel_sigma: number;
  n_samples: number;
  seed: number;
}

export interface QueueItem {
  item_id: string;
  series_id: string;
  date: string;
  score: number;
  strategy: string;
  status: string;
}

export interface DecisionOptionPayload {
  option_id: string;
  mode: string;
  ship_day: number;
  quantity: number;
  expected_cost: number;
  rank: number;
  directive_text: string;
  risk_flags: string[];
}

export interface ScenarioPayload {
  scenario_id: string;
  series_id: string;
  kind: string;
  magnitude: number;
  tag: string | null;
  confidence: number | null;
  novelty: number | null;
  human_verdict: string | null;
}

export interface FeedbackBody {
  target_kind: "forecast" | "explanation" | "decision" | "scenario" | "query_item";
  target_id: string;
  signal_kind: "rating" | "label" | "chosen_option" | "verdict" | "viewed" | "dismissed" | "dwell";
  value?: number | string | null;
}

export interface HistoryPoint {
  date: string;
  value: number;
}

/** Everything a forecast card renders; all values trace to API payloads. */
export interface ForecastCardModel {
  history: HistoryPoint[];
  forecast: ForecastPayload;
  explanation: ExplanationPayload | null;
  options: DecisionOptionPayload[];
  riskFlags: string[];
}
