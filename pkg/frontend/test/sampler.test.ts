import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { InputMessage } from "../src/protocol.js";
import { clampPosition, INPUT_HZ, InputSampler, normalizePointer } from "../src/sampler.js";

describe("normalizePointer", () => {
  const rect = { left: 100, width: 800 };

  it("maps the track center to 0", () => {
    expect(normalizePointer(500, rect)).toBe(0);
  });

  it("maps the left edge to -1 and the right edge to +1", () => {
    expect(normalizePointer(100, rect)).toBe(-1);
    expect(normalizePointer(900, rect)).toBe(1);
  });

  it("clamps pointer positions outside the track", () => {
    expect(normalizePointer(-50, rect)).toBe(-1);
    expect(normalizePointer(2000, rect)).toBe(1);
  });
});

describe("clampPosition", () => {
  it("passes in-range values through and clips the rest", () => {
    expect(clampPosition(0.25)).toBe(0.25);
    expect(clampPosition(-3)).toBe(-1);
    expect(clampPosition(1.0001)).toBe(1);
  });
});

describe("InputSampler", () => {
  let sent: InputMessage[];
  let sampler: InputSampler;

  beforeEach(() => {
    vi.useFakeTimers();
    sent = [];
    sampler = new InputSampler((m) => sent.push(m), { now: () => Date.now() });
  });

  afterEach(() => {
    sampler.stop();
    vi.useRealTimers();
  });

  it("emits at the configured rate within five percent over ten seconds", () => {
    sampler.start();
    vi.advanceTimersByTime(10_000);
    sampler.stop();
    expect(sent.length).toBeGreaterThanOrEqual(Math.floor(10 * INPUT_HZ * 0.95));
    expect(sent.length).toBeLessThanOrEqual(Math.ceil(10 * INPUT_HZ * 1.05));
  });

  it("produces about twelve hundred messages over a thirty second trial", () => {
    sampler.start();
    vi.advanceTimersByTime(30_000);
    sampler.stop();
    expect(Math.abs(sent.length - 1200)).toBeLessThanOrEqual(60);
  });

  it("only ever emits input messages with strictly increasing timestamps", () => {
    sampler.start();
    vi.advanceTimersByTime(5_000);
    sampler.stop();
    expect(sent.length).toBeGreaterThan(0);
    for (const m of sent) expect(m.type).toBe("input");
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i].t).toBeGreaterThan(sent[i - 1].t);
    }
  });

  it("clamps setX so every emitted position stays inside the track", () => {
    sampler.start();
    sampler.setX(4.2);
    vi.advanceTimersByTime(100);
    sampler.setX(-9);
    vi.advanceTimersByTime(100);
    sampler.stop();
    const xs = sent.map((m) => m.x);
    expect(Math.max(...xs)).toBeLessThanOrEqual(1);
    expect(Math.min(...xs)).toBeGreaterThanOrEqual(-1);
    expect(xs).toContain(1);
    expect(xs).toContain(-1);
  });

  it("holds the latest position between pointer events", () => {
    sampler.start();
    sampler.setX(0.5);
    vi.advanceTimersByTime(250);
    sampler.stop();
    expect(sent.length).toBeGreaterThanOrEqual(9);
    for (const m of sent) expect(m.x).toBe(0.5);
  });

  it("stops emitting once stopped and reports its running state", () => {
    sampler.start();
    expect(sampler.running).toBe(true);
    vi.advanceTimersByTime(1_000);
    sampler.stop();
    expect(sampler.running).toBe(false);
    const count = sent.length;
    vi.advanceTimersByTime(1_000);
    expect(sent.length).toBe(count);
  });

  it("counts what it sent", () => {
    sampler.start();
    vi.advanceTimersByTime(2_000);
    sampler.stop();
    expect(sampler.sentCount).toBe(sent.length);
  });
});
