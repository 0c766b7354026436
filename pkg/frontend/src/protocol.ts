/**
 * Wire types for the live session WebSocket, mirrored from the server.
 *
 * The client only ever sends hello and input; everything else is
 * server-to-client.  parseServerMessage is the single entry point for
 * untrusted socket text: anything malformed comes back as null so the
 * render loop never sees a half-built message.
 */

export interface HelloMessage {
  type: "hello";
  name: string;
}

export interface InputMessage {
  type: "input";
  /** client clock, milliseconds; must be strictly increasing */
  t: number;
  /** normalized pointer position in [-1, 1] */
  x: number;
}

export type ClientMessage = HelloMessage | InputMessage;

export interface ConfigMessage {
  type: "config";
  session_id: string;
  condition: string;
  balls: string[];
  trial_seconds: number;
  input_hz: number;
}

export interface FrameMessage {
  type: "frame";
  /** simulation time, seconds */
  t: number;
  positions: Record<string, number>;
  debug?: { phases: number[]; r_net: number; signal_lost: boolean };
}

export interface TrialReport {
  condition: string;
  metric: string;
  value: number;
  r_net: number;
  r_tot: number;
  steps: number;
  final: boolean;
  dropped_inputs: number;
  invalid_inputs: number;
  signal_lost_ticks: number;
  trace_path?: string;
}

export interface EndMessage {
  type: "end";
  report: TrialReport;
}

export interface ErrorMessage {
  type: "error";
  error: string;
}

export type ServerMessage = ConfigMessage | FrameMessage | EndMessage | ErrorMessage;

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null;
}

export function isConfigMessage(v: unknown): v is ConfigMessage {
  return (
    isRecord(v) &&
    v.type === "config" &&
    typeof v.session_id === "string" &&
    typeof v.condition === "string" &&
    Array.isArray(v.balls) &&
    v.balls.every((b) => typeof b === "string") &&
    typeof v.trial_seconds === "number" &&
    typeof v.input_hz === "number"
  );
}

export function isFrameMessage(v: unknown): v is FrameMessage {
  if (!isRecord(v) || v.type !== "frame" || typeof v.t !== "number") return false;
  if (!isRecord(v.positions)) return false;
  return Object.values(v.positions).every(
    (x) => typeof x === "number" && Number.isFinite(x),
  );
}

export function isEndMessage(v: unknown): v is EndMessage {
  return (
    isRecord(v) &&
    v.type === "end" &&
    isRecord(v.report) &&
    typeof (v.report as Record<string, unknown>).value === "number"
  );
}

export function isErrorMessage(v: unknown): v is ErrorMessage {
  return isRecord(v) && v.type === "error" && typeof v.error === "string";
}

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (isConfigMessage(raw) || isFrameMessage(raw) || isEndMessage(raw) || isErrorMessage(raw)) {
    return raw;
  }
  return null;
}
