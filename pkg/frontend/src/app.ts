// Single-page wiring: login form (token kept in memory), forecast card,
// labeling queue, and scenario review, all over the REST API.

import { ApiClient, UnauthorizedError } from "./api.js";
import { ForecastCard } from "./forecastCard.js";
import { LabelingQueueView } from "./queueView.js";
import type { ForecastCardModel } from "./types.js";

export class App {
  readonly element: HTMLElement;
  private api: ApiClient;
  private main: HTMLElement;
  private card: ForecastCard | null = null;

  constructor(baseUrl: string) {
    this.api = new ApiClient(baseUrl);
    this.element = document.createElement("div");
    this.element.className = "planner-app";
    this.main = document.createElement("main");
    this.element.append(this.main);
    this.showLogin();
  }

  showLogin(message = ""): void {
    this.main.replaceChildren();
    const form = document.createElement("form");
    form.className = "login-form";
    const note = document.createElement("p");
    note.textContent = message || "Enter your access token.";
    const input = document.createElement("input");
    input.type = "password";
    input.className = "token-input";
    const submit = document.createElement("button");
    submit.textContent = "Sign in";
    form.append(note, input, submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.api.setToken(input.value.trim() || null);
      void this.loadDashboard();
    });
    this.main.append(form);
  }

  private onUnauthorized = (): void => {
    this.api.setToken(null);
    this.showLogin("Session expired or token rejected; sign in again.");
  };

  async loadDashboard(seriesId?: string): Promise<void> {
    this.main.replaceChildren();
    try {
      const queue = await this.api.queue(seriesId);
      const view = new LabelingQueueView(this.api, queue.items, {
        onUnauthorized: this.onUnauthorized,
      });
      this.main.append(view.element);
    } catch (err) {
      if (err instanceof UnauthorizedError) {
        this.onUnauthorized();
        return;
      }
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = `Failed to load dashboard: ${err instanceof Error ? err.message : err}`;
      this.main.append(banner);
    }
  }

  showForecastCard(model: ForecastCardModel): ForecastCard {
    if (this.card) void this.card.unmount();
    this.card = new ForecastCard(this.api, model, { onUnauthorized: this.onUnauthorized });
    this.main.append(this.card.element);
    return this.card;
  }
}
