// Single-flight guard: one POST per interaction, however fast the clicks.

export class SubmitGuard {
  private inFlight = false;

  /** Runs fn unless a previous run is still pending; returns null when
   * suppressed so callers can tell a duplicate from a result. */
  async run<T>(fn: () => Promise<T>): Promise<T | null> {
    if (this.inFlight) return null;
    this.inFlight = true;
    try {
      return await fn();
    } finally {
      this.inFlight = false;
    }
  }
}
