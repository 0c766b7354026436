/**
 * Pointer sampling: the screen x of the pointer, mapped to [-1, 1] and
 * sent as input messages on a fixed 40 Hz cadence regardless of how often
 * the pointer actually moves.  The clock is injectable so tests can drive
 * the cadence deterministically.
 */

import type { InputMessage } from "./protocol.js";

export const INPUT_HZ = 40;

export interface TrackRect {
  left: number;
  width: number;
}

/** Map a pointer clientX onto the track: center 0, left edge -1, clamped. */
export function normalizePointer(clientX: number, rect: TrackRect): number {
  const raw = ((clientX - rect.left) / rect.width) * 2 - 1;
  return Math.min(1, Math.max(-1, raw));
}

export function clampPosition(x: number): number {
  return Math.min(1, Math.max(-1, x));
}

export interface SamplerOptions {
  hz?: number;
  now?: () => number;
}

export class InputSampler {
  private readonly send: (m: InputMessage) => void;
  private readonly hz: number;
  private readonly now: () => number;
  private x = 0;
  private lastT = -Infinity;
  private timer: ReturnType<typeof setInterval> | null = null;
  sentCount = 0;

  constructor(send: (m: InputMessage) => void, opts: SamplerOptions = {}) {
    this.send = send;
    this.hz = opts.hz ?? INPUT_HZ;
    this.now = opts.now ?? (() => Date.now());
  }

  /** Latest pointer position; clamped on arrival, not at send time. */
  setX(x: number): void {
    this.x = clampPosition(x);
  }

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), 1000 / this.hz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private tick(): void {
    const t = this.now();
    // the server drops non-increasing timestamps; never emit one
    if (!(t > this.lastT)) return;
    this.lastT = t;
    this.sentCount += 1;
    this.send({ type: "input", t, x: this.x });
  }
}
