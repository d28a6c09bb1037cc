// Labeling queue: pending items sorted by acquisition score, one numeric
// input each. Valid submissions post /al/label once and remove the row;
// invalid input shows an inline message without touching the network.

import { ApiClient, UnauthorizedError } from "./api.js";
import { SubmitGuard } from "./guard.js";
import type { QueueItem } from "./types.js";

export const EMPTY_QUEUE_MESSAGE = "No items waiting for labels.";

export interface QueueViewHandlers {
  onUnauthorized: () => void;
}

export class LabelingQueueView {
  readonly element: HTMLElement;
  private items: QueueItem[];
  private guard = new SubmitGuard();

  constructor(
    private api: ApiClient,
    items: QueueItem[],
    private handlers: QueueViewHandlers,
  ) {
    this.items = [...items].sort((a, b) => b.score - a.score);
    this.element = document.createElement("section");
    this.element.className = "labeling-queue";
    this.render();
  }

  pendingIds(): string[] {
    return this.items.map((i) => i.item_id);
  }

  private render(): void {
    this.element.replaceChildren();
    if (this.items.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = EMPTY_QUEUE_MESSAGE;
      this.element.append(empty);
      return;
    }
    const list = document.createElement("ul");
    list.className = "queue-list";
    for (const item of this.items) {
      list.append(this.renderItem(item));
    }
    this.element.append(list);
  }

  private renderItem(item: QueueItem): HTMLElement {
    const li = document.createElement("li");
    li.className = "queue-item";
    li.dataset.itemId = item.item_id;

    const label = document.createElement("span");
    label.className = "queue-item-label";
    label.textContent = `${item.series_id} @ ${item.date} (score ${item.score.toFixed(3)})`;

    const input = document.createElement("input");
    input.type = "number";
    input.min = "0";
    input.className = "label-input";

    const error = document.createElement("span");
    error.className = "inline-error";
    error.hidden = true;

    const submit = document.createElement("button");
    submit.className = "label-submit";
    submit.textContent = "Label";
    submit.addEventListener("click", () => {
      const value = Number(input.value);
      if (input.value.trim() === "" || !Number.isFinite(value) || value < 0) {
        error.textContent = "Enter a nonnegative demand value.";
        error.hidden = false;
        return; // no POST on invalid input
      }
      error.hidden = true;
      void this.submit(item, value, error);
    });

    li.append(label, input, submit, error);
    return li;
  }

  private async submit(item: QueueItem, value: number, error: HTMLElement): Promise<void> {
    await this.guard.run(async () => {
      try {
        await this.api.submitLabel(item.item_id, value);
        this.items = this.items.filter((i) => i.item_id !== item.item_id);
        this.render();
      } catch (err) {
        if (err instanceof UnauthorizedError) {
          this.handlers.onUnauthorized();
          return;
        }
        error.textContent = err instanceof Error ? err.message : String(err);
        error.hidden = false;
      }
    });
  }
}
