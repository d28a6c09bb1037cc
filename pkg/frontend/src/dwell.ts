// Dwell timing: reported once on view unmount, floored at 0 and capped at
// ten minutes so a forgotten tab does not skew implicit feedback.

export const DWELL_CAP_MS = 10 * 60 * 1000;

export class DwellTimer {
  private startedAt: number;

  constructor(private now: () => number = () => Date.now()) {
    this.startedAt = this.now();
  }

  /** Milliseconds dwelled, clamped into [0, DWELL_CAP_MS]. */
  elapsed(): number {
    const raw = this.now() - this.startedAt;
    return Math.min(DWELL_CAP_MS, Math.max(0, Math.round(raw)));
  }
}
