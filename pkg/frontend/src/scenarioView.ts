// Scenario review: show the assessment tag and capture the human
// plausibility verdict as a feedback event.

import { ApiClient, UnauthorizedError } from "./api.js";
import { SubmitGuard } from "./guard.js";
import type { ScenarioPayload } from "./types.js";

export interface ScenarioViewHandlers {
  onUnauthorized: () => void;
}

export class ScenarioView {
  readonly element: HTMLElement;
  private guard = new SubmitGuard();
  private status: HTMLElement;

  constructor(
    private api: ApiClient,
    private scenario: ScenarioPayload,
    private handlers: ScenarioViewHandlers,
  ) {
    this.element = document.createElement("section");
    this.element.className = "scenario-view";
    this.status = document.createElement("p");
    this.status.className = "verdict-status";
    this.render();
  }

  private render(): void {
    const s = this.scenario;
    const heading = document.createElement("h3");
    heading.textContent = `${s.scenario_id}: ${s.kind} ×${s.magnitude}`;
    const tag = document.createElement("p");
    tag.className = "scenario-tag";
    tag.textContent = s.tag
      ? `tagged ${s.tag} (confidence ${s.confidence?.toFixed(3) ?? "?"}, novelty ${s.novelty?.toFixed(3) ?? "?"})`
      : "not yet assessed";
    this.element.append(heading, tag);
    for (const verdict of ["plausible", "implausible"] as const) {
      const button = document.createElement("button");
      button.className = `verdict-button ${verdict}`;
      button.textContent = verdict;
      button.addEventListener("click", () => void this.submit(verdict));
      this.element.append(button);
    }
    this.element.append(this.status);
  }

  private async submit(verdict: "plausible" | "implausible"): Promise<void> {
    await this.guard.run(async () => {
      try {
        await this.api.feedback({
          target_kind: "scenario",
          target_id: this.scenario.scenario_id,
          signal_kind: "verdict",
          value: verdict,
        });
        this.status.textContent = `verdict recorded: ${verdict}`;
      } catch (err) {
        if (err instanceof UnauthorizedError) {
          this.handlers.onUnauthorized();
          return;
        }
        this.status.textContent = `verdict failed: ${err instanceof Error ? err.message : err}`;
      }
    });
  }
}
