// Trailing-edge throttle: at most one call per interval, and the last
// value of a burst is always delivered (a slider drag must end exactly
// at its rest value).

export type Clock = () => number;

export class Throttle<T> {
  private lastSent = -Infinity;
  private pending: T | undefined;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (value: T) => void,
    private readonly intervalMs: number,
    private readonly now: Clock = () => Date.now(),
  ) {}

  push(value: T): void {
    const t = this.now();
    if (t - this.lastSent >= this.intervalMs) {
      this.lastSent = t;
      this.send(value);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      const wait = this.intervalMs - (t - this.lastSent);
      this.timer = setTimeout(() => this.flush(), wait);
    }
  }

  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (this.pending !== undefined) {
      this.lastSent = this.now();
      const value = this.pending;
      this.pending = undefined;
      this.send(value);
    }
  }
}
