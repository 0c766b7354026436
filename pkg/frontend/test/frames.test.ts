import { describe, expect, it } from "vitest";

import { layoutBalls, OTHER_COLOR, SELF_COLOR, SessionView } from "../src/frames.js";
import type { ConfigMessage, EndMessage, FrameMessage } from "../src/protocol.js";

const CONFIG: ConfigMessage = {
  type: "config",
  session_id: "s1",
  condition: "NA",
  balls: ["human", "p1", "p2", "avatar"],
  trial_seconds: 30,
  input_hz: 40,
};

function frame(t: number, positions: Record<string, number>): FrameMessage {
  return { type: "frame", t, positions };
}

const END: EndMessage = {
  type: "end",
  report: {
    condition: "NA",
    metric: "r_net",
    value: 0.91,
    r_net: 0.91,
    r_tot: 0.88,
    steps: 3000,
    final: true,
    dropped_inputs: 0,
    invalid_inputs: 0,
    signal_lost_ticks: 0,
  },
};

describe("SessionView", () => {
  it("goes live on config and stores it", () => {
    const view = new SessionView();
    expect(view.status).toBe("connecting");
    view.handle(CONFIG);
    expect(view.status).toBe("live");
    expect(view.config?.balls).toEqual(["human", "p1", "p2", "avatar"]);
  });

  it("keeps the newest frame and drops stale ones", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    expect(view.handle(frame(0.5, { human: 0.1 }))).toBe(true);
    expect(view.handle(frame(0.4, { human: 0.9 }))).toBe(false);
    expect(view.handle(frame(0.5, { human: 0.9 }))).toBe(false);
    expect(view.staleDropped).toBe(2);
    expect(view.frame?.positions.human).toBe(0.1);
    expect(view.handle(frame(0.6, { human: 0.2 }))).toBe(true);
    expect(view.frame?.t).toBe(0.6);
  });

  it("ends with the report attached", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(END);
    expect(view.status).toBe("ended");
    expect(view.report?.metric).toBe("r_net");
    expect(view.report?.value).toBeCloseTo(0.91, 12);
  });

  it("freezes the last frame on disconnect", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(frame(1.0, { human: -0.3, p1: 0.2 }));
    view.disconnect();
    expect(view.status).toBe("disconnected");
    expect(view.frame?.positions.human).toBe(-0.3);
  });

  it("does not regress to disconnected after the trial already ended", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(END);
    view.disconnect();
    expect(view.status).toBe("ended");
  });

  it("records server errors", () => {
    const view = new SessionView();
    view.handle({ type: "error", error: "session-exists" });
    expect(view.status).toBe("error");
    expect(view.lastError).toBe("session-exists");
  });
});

describe("layoutBalls", () => {
  it("renders one marker per ball present in the frame", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(frame(0.2, { human: 0.0, p1: 0.4, p2: -0.4 }));
    const markers = layoutBalls(view, "human", 0.0);
    expect(markers).toHaveLength(3);
    expect(markers.map((m) => m.id)).toEqual(["human", "p1", "p2"]);
  });

  it("echoes the local pointer for the self ball and server values for others", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(frame(0.2, { human: 0.9, p1: 0.4 }));
    const markers = layoutBalls(view, "human", -0.25);
    const self = markers.find((m) => m.id === "human")!;
    const other = markers.find((m) => m.id === "p1")!;
    expect(self.isSelf).toBe(true);
    expect(self.x).toBe(-0.25);
    expect(self.color).toBe(SELF_COLOR);
    expect(other.isSelf).toBe(false);
    expect(other.x).toBe(0.4);
    expect(other.color).toBe(OTHER_COLOR);
  });

  it("assigns lanes by roster order and clamps wild positions", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    view.handle(frame(0.2, { human: 0.0, p1: 7.0, p2: -3.0, avatar: 0.5 }));
    const markers = layoutBalls(view, "human", 2.5);
    expect(markers.map((m) => m.lane)).toEqual([0, 1, 2, 3]);
    const byId = new Map(markers.map((m) => [m.id, m]));
    expect(byId.get("human")!.x).toBe(1);
    expect(byId.get("p1")!.x).toBe(1);
    expect(byId.get("p2")!.x).toBe(-1);
  });

  it("renders nothing before the first frame", () => {
    const view = new SessionView();
    view.handle(CONFIG);
    expect(layoutBalls(view, "human", 0)).toEqual([]);
  });
});
