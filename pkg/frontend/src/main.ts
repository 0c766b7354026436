/**
 * Browser entry point: create a session, open its socket, stream pointer
 * input, and draw whatever SessionView holds.  All simulation authority
 * stays server-side; this file is intentionally thin DOM glue around the
 * tested sampler/frames/protocol modules.
 */

import { layoutBalls, SessionView } from "./frames.js";
import { parseServerMessage } from "./protocol.js";
import { InputSampler, normalizePointer } from "./sampler.js";

const SELF_ID = "human";

const canvas = document.getElementById("track") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const overlay = document.getElementById("overlay")!;
const statusLine = document.getElementById("status")!;
const retryButton = document.getElementById("retry") as HTMLButtonElement;
const revealToggle = document.getElementById("reveal") as HTMLInputElement;

const view = new SessionView();
let localX = 0;
let socket: WebSocket | null = null;

const sampler = new InputSampler((msg) => {
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(JSON.stringify(msg));
  }
});

async function createSession(): Promise<string | null> {
  try {
    const resp = await fetch("/session", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: "{}",
    });
    const body = await resp.json();
    if (!resp.ok) {
      view.lastError = body.error ?? `HTTP ${resp.status}`;
      view.status = "error";
      return null;
    }
    return body.ws_path as string;
  } catch {
    view.status = "disconnected";
    return null;
  }
}

function connect(wsPath: string): void {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  socket = new WebSocket(`${proto}://${location.host}${wsPath}`);
  socket.onopen = () => {
    socket!.send(JSON.stringify({ type: "hello", name: "browser" }));
    sampler.start();
  };
  socket.onmessage = (ev) => {
    const msg = parseServerMessage(String(ev.data));
    if (msg !== null) view.handle(msg);
    if (view.status === "ended" || view.status === "error") sampler.stop();
  };
  socket.onclose = () => {
    sampler.stop();
    view.disconnect();
  };
}

async function start(): Promise<void> {
  const wsPath = await createSession();
  if (wsPath !== null) connect(wsPath);
}

canvas.addEventListener("pointermove", (ev) => {
  const rect = canvas.getBoundingClientRect();
  localX = normalizePointer(ev.clientX, { left: rect.left, width: rect.width });
  sampler.setX(localX);
});

retryButton.addEventListener("click", () => {
  view.status = "connecting";
  view.lastError = null;
  void start();
});

function drawBall(x: number, lane: number, lanes: number, color: string, label: string): void {
  const margin = 40;
  const trackWidth = canvas.width - 2 * margin;
  const px = margin + ((x + 1) / 2) * trackWidth;
  const py = ((lane + 1) / (lanes + 1)) * canvas.height;
  ctx.beginPath();
  ctx.arc(px, py, 14, 0, 2 * Math.PI);
  ctx.fillStyle = color;
  ctx.fill();
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(label, margin, py - 20);
}

function render(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const lanes = view.config?.balls.length ?? 1;
  // frozen frame keeps rendering after a disconnect; nothing newer exists
  for (const marker of layoutBalls(view, SELF_ID, localX)) {
    const revealed = view.status === "ended" && revealToggle.checked && marker.id === "avatar";
    drawBall(marker.x, marker.lane, lanes,
             revealed ? "#7a3ba8" : marker.color,
             marker.isSelf ? "you" : revealed ? "avatar" : "");
  }

  banner.hidden = view.status !== "disconnected" && view.status !== "error";
  banner.textContent = view.status === "error"
    ? `session error: ${view.lastError ?? "unknown"}`
    : "connection lost; showing the last received frame";
  retryButton.hidden = banner.hidden;

  if (view.status === "ended" && view.report !== null) {
    overlay.hidden = false;
    overlay.querySelector("#report")!.textContent =
      `${view.report.condition}: <${view.report.metric}> = ${view.report.value.toFixed(4)}`
      + ` over ${view.report.steps} steps`;
  } else {
    overlay.hidden = true;
  }

  statusLine.textContent = view.config === null
    ? view.status
    : `${view.status} | condition ${view.config.condition} | ${view.config.balls.length} balls`;

  requestAnimationFrame(render);
}

void start();
requestAnimationFrame(render);
