import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { Throttle } from '../src/throttle.js';

describe('Throttle', () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it('caps the message rate', () => {
    const sent: number[] = [];
    const t = new Throttle<number>((v) => sent.push(v), 50, () => Date.now());
    for (let i = 0; i < 20; i++) {
      t.push(i);
      vi.advanceTimersByTime(10);
    }
    vi.advanceTimersByTime(100);
    // 200 ms of drags at 50 ms interval: at most 1 + 200/50 + trailing
    expect(sent.length).toBeLessThanOrEqual(6);
    expect(sent[0]).toBe(0);
  });

  it('always delivers the final value of a drag', () => {
    const sent: number[] = [];
    const t = new Throttle<number>((v) => sent.push(v), 50, () => Date.now());
    for (let i = 0; i <= 16; i++) {
      t.push(i / 10);
      vi.advanceTimersByTime(5);
    }
    vi.advanceTimersByTime(200);
    expect(sent[sent.length - 1]).toBe(1.6);
  });

  it('sends immediately when idle', () => {
    const sent: number[] = [];
    const t = new Throttle<number>((v) => sent.push(v), 50, () => Date.now());
    t.push(7);
    expect(sent).toEqual([7]);
    vi.advanceTimersByTime(1000);
    t.push(8);
    expect(sent).toEqual([7, 8]);
  });

  it('flush is idempotent', () => {
    const sent: number[] = [];
    const t = new Throttle<number>((v) => sent.push(v), 50, () => Date.now());
    t.push(1);
    t.push(2);
    t.flush();
    t.flush();
    expect(sent).toEqual([1, 2]);
  });
});
