// Forecast card: chart with interval band, top-5 signed attribution bars,
// risk flags, a rating control, dismissal, and the decision options table.
// Every interaction posts exactly one feedback event (single-flight guard).

import { ApiClient, UnauthorizedError } from "./api.js";
import { renderChart } from "./chart.js";
import { DwellTimer } from "./dwell.js";
import { SubmitGuard } from "./guard.js";
import type { AttributionEntry, ForecastCardModel } from "./types.js";

export const TOP_K_ATTRIBUTIONS = 5;
export const REDACTED_LABEL = "confidential feature";

/** Client-side assertion backing the server's redaction guarantee: a
 * redacted entry must carry no weight and no real feature name. */
export function assertRedactionSound(attributions: AttributionEntry[]): void {
  for (const entry of attributions) {
    if (entry.feature === "redacted" && entry.weight !== undefined) {
      throw new Error("redacted attribution leaked a weight");
    }
  }
}

export interface ForecastCardHandlers {
  onUnauthorized: () => void;
}

export class ForecastCard {
  readonly element: HTMLElement;
  private dwell: DwellTimer;
  private guard = new SubmitGuard();
  private banner: HTMLElement;
  private unmounted = false;

  constructor(
    private api: ApiClient,
    private model: ForecastCardModel,
    private handlers: ForecastCardHandlers,
  ) {
    this.dwell = new DwellTimer();
    this.element = document.createElement("section");
    this.element.className = "forecast-card";
    this.banner = document.createElement("div");
    this.banner.className = "error-banner";
    this.banner.hidden = true;
    this.render();
  }

  private render(): void {
    const { forecast, history, explanation, options, riskFlags } = this.model;
    this.element.replaceChildren();
    this.element.append(this.banner);

    const title = document.createElement("h2");
    title.textContent = `${forecast.series_id} / ${forecast.model_key} v${forecast.model_version}`;
    this.element.append(title);

    if (forecast.trust_warning) {
      const warning = document.createElement("div");
      warning.className = "trust-warning";
      warning.textContent = `Trust warning: ${forecast.trust_warning.message}`;
      this.element.append(warning);
    }

    this.element.append(renderChart(history, forecast));

    if (riskFlags.length) {
      const flags = document.createElement("ul");
      flags.className = "risk-flags";
      for (const flag of riskFlags) {
        const li = document.createElement("li");
        li.textContent = flag;
        flags.append(li);
      }
      this.element.append(flags);
    }

    if (explanation) {
      assertRedactionSound(explanation.attributions);
      this.element.append(this.renderAttributions(explanation.attributions));
      this.element.append(this.renderRatingControl(explanation.explanation_id));
      this.element.append(this.renderDismiss(explanation.explanation_id));
    }

    this.element.append(this.renderOptions(options));
  }

  private renderAttributions(attributions: AttributionEntry[]): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "attribution-bars";
    const maxAbs = Math.max(
      1e-9,
      ...attributions.map((a) => Math.abs(a.weight ?? 0)),
    );
    for (const entry of attributions.slice(0, TOP_K_ATTRIBUTIONS)) {
      const row = document.createElement("div");
      row.className = "attribution-row";
      const label = document.createElement("span");
      label.className = "attribution-label";
      label.textContent = entry.feature === "redacted" ? REDACTED_LABEL : entry.feature;
      const bar = document.createElement("span");
      bar.className = "attribution-bar";
      if (entry.weight === undefined) {
        bar.classList.add("redacted");
      } else {
        bar.classList.add(entry.weight >= 0 ? "positive" : "negative");
        bar.style.width = `${(100 * Math.abs(entry.weight)) / maxAbs}%`;
        bar.dataset.weight = String(entry.weight);
      }
      row.append(label, bar);
      wrap.append(row);
    }
    return wrap;
  }

  private renderRatingControl(explanationId: string): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "rating-control";
    for (let value = 1; value <= 5; value++) {
      const button = document.createElement("button");
      button.className = "rate-button";
      button.dataset.rating = String(value);
      button.textContent = "★".repeat(value);
      button.addEventListener("click", () => {
        void this.submit({
          target_kind: "explanation",
          target_id: explanationId,
          signal_kind: "rating",
          value,
        });
      });
      wrap.append(button);
    }
    return wrap;
  }

  private renderDismiss(explanationId: string): HTMLElement {
    const button = document.createElement("button");
    button.className = "dismiss-button";
    button.textContent = "Dismiss explanation";
    button.addEventListener("click", () => {
      void this.submit({
        target_kind: "explanation",
        target_id: explanationId,
        signal_kind: "dismissed",
      });
    });
    return button;
  }

  private renderOptions(options: ForecastCardModel["options"]): HTMLElement {
    const table = document.createElement("table");
    table.className = "options-table";
    const head = document.createElement("tr");
    for (const column of ["rank", "mode", "ship day", "quantity", "expected cost", "directive", ""]) {
      const th = document.createElement("th");
      th.textContent = column;
      head.append(th);
    }
    table.append(head);
    for (const option of options) {
      const row = document.createElement("tr");
      row.dataset.optionId = option.option_id;
      for (const cell of [
        String(option.rank),
        option.mode,
        String(option.ship_day),
        String(option.quantity),
        option.expected_cost.toFixed(2),
        option.directive_text,
      ]) {
        const td = document.createElement("td");
        td.textContent = cell;
        row.append(td);
      }
      const chooseCell = document.createElement("td");
      const choose = document.createElement("button");
      choose.className = "choose-option";
      choose.textContent = "Choose";
      choose.addEventListener("click", () => {
        void this.submit({
          target_kind: "decision",
          target_id: option.option_id,
          signal_kind: "chosen_option",
          value: option.option_id,
        });
      });
      chooseCell.append(choose);
      row.append(chooseCell);
      table.append(row);
    }
    return table;
  }

  private async submit(body: Parameters<ApiClient["feedback"]>[0]): Promise<void> {
    const result = await this.guard.run(async () => {
      try {
        await this.api.feedback(body);
        this.banner.hidden = true;
        return true;
      } catch (err) {
        if (err instanceof UnauthorizedError) {
          this.handlers.onUnauthorized();
          return false;
        }
        this.showError(err instanceof Error ? err.message : String(err));
        return false;
      }
    });
    void result;
  }

  private showError(message: string): void {
    this.banner.textContent = `Request failed: ${message}`;
    this.banner.hidden = false;
  }

  /** Reports dwell time once; further calls are no-ops. */
  async unmount(): Promise<void> {
    if (this.unmounted) return;
    this.unmounted = true;
    try {
      await this.api.feedback({
        target_kind: "forecast",
        target_id: this.model.forecast.forecast_id,
        signal_kind: "dwell",
        value: this.dwell.elapsed(),
      });
    } catch {
      // dwell reporting is best-effort; never block teardown
    }
  }
}
