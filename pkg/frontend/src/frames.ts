/**
 * Client-side session state: connection status, the newest frame, and the
 * trial report.  Frames are filtered by timestamp so a late-arriving older
 * frame can never replace a newer one on screen; on disconnect the last
 * frame freezes in place.
 */

import type {
  ConfigMessage,
  FrameMessage,
  ServerMessage,
  TrialReport,
} from "./protocol.js";

export type SessionStatus =
  | "connecting"
  | "live"
  | "ended"
  | "disconnected"
  | "error";

export class SessionView {
  status: SessionStatus = "connecting";
  config: ConfigMessage | null = null;
  frame: FrameMessage | null = null;
  report: TrialReport | null = null;
  lastError: string | null = null;
  staleDropped = 0;

  /** Feed one parsed server message; returns false when it was ignored. */
  handle(msg: ServerMessage): boolean {
    switch (msg.type) {
      case "config":
        this.config = msg;
        this.status = "live";
        return true;
      case "frame":
        if (this.frame !== null && msg.t <= this.frame.t) {
          this.staleDropped += 1;
          return false;
        }
        this.frame = msg;
        return true;
      case "end":
        this.report = msg.report;
        this.status = "ended";
        return true;
      case "error":
        this.lastError = msg.error;
        this.status = "error";
        return true;
    }
  }

  /** Socket dropped mid-trial: keep the frame, surface the banner. */
  disconnect(): void {
    if (this.status === "live" || this.status === "connecting") {
      this.status = "disconnected";
    }
  }
}

export interface BallMarker {
  id: string;
  /** normalized x in [-1, 1] */
  x: number;
  /** vertical lane index, top to bottom */
  lane: number;
  color: string;
  isSelf: boolean;
}

export const SELF_COLOR = "#2b6fd6";
export const OTHER_COLOR = "#e8913a";

/**
 * Lay out one marker per ball in the current frame.  The self ball echoes
 * the locally sampled position (client-side prediction); every other ball
 * renders exactly the server-provided value, clamped to the track.
 */
export function layoutBalls(
  view: SessionView,
  selfId: string,
  localX: number,
): BallMarker[] {
  if (view.config === null || view.frame === null) return [];
  const markers: BallMarker[] = [];
  view.config.balls.forEach((id, lane) => {
    const fromServer = view.frame!.positions[id];
    if (fromServer === undefined) return;
    const isSelf = id === selfId;
    markers.push({
      id,
      x: Math.min(1, Math.max(-1, isSelf ? localX : fromServer)),
      lane,
      color: isSelf ? SELF_COLOR : OTHER_COLOR,
      isSelf,
    });
  });
  return markers;
}
