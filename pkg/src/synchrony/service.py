"""Live session service: one human, simulated oscillators, one avatar.

The human's browser streams pointer positions at 40 Hz over a WebSocket;
the server resamples them to the 100 Hz simulation tick with a zero-order
hold, estimates the human's phase online, and injects it as a Kuramoto
node that is never integrated (measured, not modeled).  Simulated
participants follow the usual Euler dynamics; the avatar runs whichever
controller the condition calls for.  Frames go back to the client at the
input rate.

All simulation state lives in SessionEngine, a synchronous state machine
with no I/O; the network layer only passes messages to and from it, so
the whole pipeline can be driven deterministically in tests (pacing
"lockstep") or against the wall clock (pacing "realtime").

Message protocol (JSON text frames):
  client -> server: {"type": "hello", "name": str}
                    {"type": "input", "t": <client ms>, "x": <[-1, 1]>}
  server -> client: {"type": "config", "session_id", "condition",
                     "balls": [ids], "trial_seconds", "input_hz"}
                    {"type": "frame", "t": <sim s>, "positions": {id: x}}
                    {"type": "end", "report": {...}}
                    {"type": "error", "error": str}
"""

from __future__ import annotations

import json
import logging
import math
import os
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from . import dqn, metrics, phase_est
from .agents import (OMEGA_MAX_DEFAULT, OMEGA_MIN_DEFAULT, CaController,
                     NaController)
from .graphs import attach_avatar, make_complete_graph
from .model import FrequencyProcess, StepView, wrap_angles

log = logging.getLogger("synchrony.service")

CONDITIONS = ("Solo", "P", "CA", "NA", "CA-RC", "CA-RF")

SERVE_DEFAULT = {
    "condition": "P",
    "n_sim": 4,
    "input_hz": 40.0,
    "sim_hz": 100.0,
    "trial_seconds": 30.0,
    "coupling": 1.25,
    "frequencies": {"kind": "gaussian-per-step", "mean": 4.15, "spread": 0.3},
    "checkpoint": None,
    "seed": 0,
    "pacing": "realtime",
    "gap_ms": 250.0,
    "bootstrap_seconds": 1.0,
    "debug_frames": False,
    "out": "sessions",
    "host": "127.0.0.1",
    "port": 8000,
    "static_dir": None,
}


@dataclass(frozen=True)
class SessionConfig:
    condition: str = "P"
    n_sim: int = 4
    input_hz: float = 40.0
    sim_hz: float = 100.0
    trial_seconds: float = 30.0
    coupling: float = 1.25
    frequencies: dict = field(default_factory=lambda: dict(SERVE_DEFAULT["frequencies"]))
    checkpoint: object = None
    seed: int = 0
    pacing: str = "realtime"
    gap_ms: float = 250.0
    bootstrap_seconds: float = 1.0
    debug_frames: bool = False
    out: object = "sessions"

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.condition != "Solo" and self.n_sim < 1:
            raise ValueError(f"n_sim must be >= 1 for condition {self.condition}, got {self.n_sim}")
        if self.condition in ("CA-RC", "CA-RF") and self.n_sim < 2:
            raise ValueError("replacing conditions need n_sim >= 2")
        for name in ("input_hz", "sim_hz", "trial_seconds", "coupling", "gap_ms",
                     "bootstrap_seconds"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.sim_hz < self.input_hz:
            raise ValueError("sim_hz must be at least input_hz")
        if self.pacing not in ("realtime", "lockstep"):
            raise ValueError(f"pacing must be realtime or lockstep, got {self.pacing!r}")
        if self.condition in ("CA", "CA-RC", "CA-RF") and not self.checkpoint:
            raise ValueError(f"condition {self.condition} requires a checkpoint")

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known - {"host", "port", "static_dir"}
        if extra:
            raise ValueError(f"unknown session config fields: {sorted(extra)}")
        kwargs = {k: d[k] for k in known if k in d}
        return cls(**kwargs)


FRAME_GUARD = 1.2


class SessionEngine:
    """Synchronous trial state machine: ingest inputs, step, emit frames.

    The human occupies node 0 and is never integrated; its phase comes
    from the online estimator (held at pi/2 until the bootstrap window
    fills).  An input gap longer than gap_ms freezes both the human phase
    and the avatar command until samples resume.
    """

    def __init__(self, config: SessionConfig, ca_params=None):
        self.config = config
        if config.condition in ("CA", "CA-RC", "CA-RF") and ca_params is None:
            ca_params, _, _ = dqn.load_checkpoint(config.checkpoint)
        self.dt = 1.0 / config.sim_hz
        self.n_steps = int(round(config.trial_seconds * config.sim_hz))
        self.frames_per_step = config.input_hz / config.sim_hz

        self._build_group(config, ca_params)

        self.k = 0
        self.phases = np.full(self.n_nodes, math.pi / 2)
        self.unwrapped = self.phases.copy()
        self.drop_count = 0
        self.invalid_count = 0
        self.signal_lost = False
        self.signal_lost_ticks = 0
        self._pending: list = []
        self._last_t_ms = None
        self._last_input_tick = None
        self._zoh_x = 0.0
        self._have_input = False

        # human phase pipeline
        self._vel = phase_est.VelocityTracker(self.dt)
        self._boot_pos: list = []
        self._boot_vel: list = []
        self._boot_steps = int(round(config.bootstrap_seconds * config.sim_hz))
        self._est = None
        self.theta_human = math.pi / 2

        seq = np.random.SeedSequence((config.seed, 0x5e55))
        self._rng = np.random.default_rng(seq)
        if self.sim_ids:
            proc = FrequencyProcess(
                kind=config.frequencies.get("kind", "gaussian-per-step"),
                mean=self.sim_means, spread=self.sim_spreads)
            self._freq_table = proc.draw_table(self.n_steps, self._rng)
        else:
            self._freq_table = np.zeros((self.n_steps, 0))

        self._omega_a_cmd = 0.5 * (OMEGA_MIN_DEFAULT + OMEGA_MAX_DEFAULT)
        self.trace = np.zeros((self.n_steps + 1, self.n_nodes))
        self.trace[0] = self.phases
        self._unwrap_buf = np.zeros((self.n_steps + 1, self.n_nodes))
        self._unwrap_buf[0] = self.phases
        self.input_trace = np.zeros(self.n_steps + 1)
        self.omega_a_trace = np.zeros(self.n_steps + 1)
        self._next_frame = 0

    # -- group construction ------------------------------------------------

    def _build_group(self, config: SessionConfig, ca_params) -> None:
        cond = config.condition
        n_sim = 0 if cond == "Solo" else config.n_sim
        sim_means = np.broadcast_to(
            np.asarray(config.frequencies.get("mean", 4.15), dtype=np.float64),
            (max(n_sim, 1),))[:n_sim].copy()
        sim_spreads = np.broadcast_to(
            np.asarray(config.frequencies.get("spread", 0.3), dtype=np.float64),
            (max(n_sim, 1),))[:n_sim].copy()

        if cond == "Solo":
            self.graph = None
            self.ball_ids = ["human"]
            self.sim_ids = []
            self.sim_means = sim_means[:0]
            self.sim_spreads = sim_spreads[:0]
            self.avatar_idx = -1
            self.participant_idx = np.array([0], dtype=np.int64)
            self.n_nodes = 1
            self.controller = None
            return

        base = make_complete_graph(1 + n_sim)  # node 0 = human
        ids = ["human"] + [f"p{i + 1}" for i in range(n_sim)]
        sim_nodes = list(range(1, 1 + n_sim))
        keep = np.arange(n_sim)

        if cond == "P":
            self.graph, self.avatar_idx = base, -1
            self.controller = None
        elif cond in ("CA", "NA"):
            self.graph = attach_avatar(base, list(range(base.n)))
            self.avatar_idx = base.n
            ids.append("avatar")
            if cond == "CA":
                self.controller = CaController(ca_params)
            else:
                self.controller = NaController(self.dt)
        else:  # CA-RC / CA-RF: avatar takes over one simulated node's slot
            dist = np.abs(sim_means - sim_means.mean())
            pick = int(np.argmin(dist) if cond == "CA-RC" else np.argmax(dist))
            self.avatar_idx = sim_nodes[pick]
            del sim_nodes[pick]
            keep = np.delete(keep, pick)
            self.graph = base
            ids[self.avatar_idx] = "avatar"
            self.controller = CaController(ca_params)

        self.ball_ids = ids
        self.sim_ids = sim_nodes
        self.sim_means = sim_means[keep]
        self.sim_spreads = sim_spreads[keep]
        self.n_nodes = self.graph.n
        self.participant_idx = np.array(
            [i for i in range(self.n_nodes) if i != self.avatar_idx], dtype=np.int64)

    # -- input ingestion ---------------------------------------------------

    def ingest(self, t_ms, x) -> bool:
        """Queue one input sample; returns False when it was dropped."""
        try:
            t_ms = float(t_ms)
            x = float(x)
        except (TypeError, ValueError):
            self.invalid_count += 1
            return False
        if not (math.isfinite(t_ms) and math.isfinite(x)):
            self.invalid_count += 1
            return False
        if self._last_t_ms is not None and t_ms <= self._last_t_ms:
            self.drop_count += 1
            return False
        self._last_t_ms = t_ms
        self._pending.append(max(-1.0, min(1.0, x)))
        return True

    # -- stepping ----------------------------------------------------------

    def _human_phase(self) -> float:
        if self._pending:
            self._zoh_x = self._pending[-1]
            self._pending.clear()
            self._have_input = True
            self._last_input_tick = self.k
        gap_ticks = self.config.gap_ms / 1000.0 / self.dt
        lost = (self._have_input
                and self.k - self._last_input_tick > gap_ticks)
        if lost and not self.signal_lost:
            log.info("signal lost at tick %d", self.k)
        self.signal_lost = lost
        if lost:
            self.signal_lost_ticks += 1
            return self.theta_human  # hold

        if not self._have_input:
            return self.theta_human

        p = self._zoh_x
        v = self._vel.step(p)
        if self._est is None:
            self._boot_pos.append(p)
            self._boot_vel.append(v)
            if len(self._boot_pos) >= self._boot_steps:
                try:
                    self._est = phase_est.init_estimator(
                        np.asarray(self._boot_pos[-self._boot_steps:]),
                        np.asarray(self._boot_vel[-self._boot_steps:]),
                        self.dt, window=self.config.bootstrap_seconds)
                except ValueError:
                    pass  # no motion yet; keep sliding the window
            return self.theta_human
        theta, self._est = phase_est.estimate_step(self._est, p, v)
        return theta

    def _avatar_omega(self) -> float:
        if self.controller is None:
            return 0.0
        if self.signal_lost:
            return self._omega_a_cmd  # hold during signal loss
        part_phases = self.phases[self.participant_idx]
        if isinstance(self.controller, NaController):
            # live velocity estimate: unwrapped phase difference over 0.25 s
            w = max(1, int(round(0.25 / self.dt)))
            k0 = max(0, self.k - w)
            hist = self._unwrap_trace
            vels = (hist[self.k, self.participant_idx]
                    - hist[k0, self.participant_idx]) / ((self.k - k0) * self.dt) \
                if self.k > 0 else np.zeros(len(self.participant_idx))
            view = StepView(k=self.k, dt=self.dt, phases=self.phases,
                            participant_velocities=vels,
                            participant_ids=self.participant_idx, graph=self.graph)
        else:
            view = StepView(k=self.k, dt=self.dt, phases=self.phases,
                            participant_velocities=np.zeros(len(self.participant_idx)),
                            participant_ids=self.participant_idx, graph=self.graph)
        self._omega_a_cmd = float(self.controller.decide(view, self.avatar_idx))
        return self._omega_a_cmd

    def step(self) -> None:
        """Advance the simulation by one tick."""
        if self.finished:
            raise RuntimeError("trial already finished")
        new_theta_h = self._human_phase()

        if self.graph is None:  # Solo: no dynamics at all
            self.theta_human = new_theta_h
            self.phases[0] = new_theta_h
        else:
            omega = np.zeros(self.n_nodes)
            omega[self.sim_ids] = self._freq_table[self.k]
            omega_a = self._avatar_omega()
            if self.avatar_idx >= 0:
                omega[self.avatar_idx] = omega_a
            adj = self.graph.adjacency
            diff = self.phases[None, :] - self.phases[:, None]
            dtheta = omega + self.config.coupling * np.sum(adj * np.sin(diff), axis=1)
            new_phases = self.phases + self.dt * dtheta
            new_phases[0] = new_theta_h  # measured, not modeled
            self.unwrapped = self._accumulate_unwrap(new_phases)
            self.phases = wrap_angles(new_phases)
            self.theta_human = float(self.phases[0])
            self.omega_a_trace[self.k + 1] = omega_a if self.avatar_idx >= 0 else 0.0

        self.k += 1
        self.trace[self.k] = self.phases
        self.input_trace[self.k] = self._zoh_x
        self._unwrap_trace[self.k] = self.unwrapped

    def _accumulate_unwrap(self, new_phases: np.ndarray) -> np.ndarray:
        delta = wrap_angles(new_phases - self.trace[self.k])
        return self.unwrapped + delta

    @property
    def _unwrap_trace(self) -> np.ndarray:
        return self._unwrap_buf

    @property
    def finished(self) -> bool:
        return self.k >= self.n_steps

    # -- frames ------------------------------------------------------------

    def frame_due(self) -> bool:
        return self.k * self.frames_per_step >= self._next_frame

    def make_frame(self) -> dict:
        """Render a frame; human echoes raw input, others map phase to x."""
        self._next_frame += 1
        pos_amp, neg_amp = self._mean_amplitudes()
        positions = {}
        for idx, ball in enumerate(self.ball_ids):
            node = self._ball_node(idx)
            if ball == "human":
                x = self._zoh_x
            else:
                x = phase_est.phase_to_position(
                    float(self.phases[node]), [pos_amp], [neg_amp])
            x = float(np.clip(x, -FRAME_GUARD, FRAME_GUARD))
            if not math.isfinite(x):
                raise AssertionError(f"non-finite ball position for {ball}")
            positions[ball] = x
        frame = {"type": "frame", "t": round(self.k * self.dt, 6),
                 "positions": positions}
        if self.config.debug_frames:
            frame["debug"] = {
                "phases": [float(p) for p in self.phases],
                "r_net": float(metrics.coherence(
                    self.phases, self.participant_idx)),
                "signal_lost": self.signal_lost,
            }
        return frame

    def _ball_node(self, ball_idx: int) -> int:
        # ball_ids was built in node order, so index == node id
        return ball_idx

    def _mean_amplitudes(self):
        # simulated oscillators render at unit amplitude; the human's
        # captured amplitudes join the average once the estimator is live
        if self._est is not None:
            pos = (1.0 * len(self.sim_ids) + self._est.a_p_pos) / (len(self.sim_ids) + 1)
            neg = (1.0 * len(self.sim_ids) + self._est.a_p_neg) / (len(self.sim_ids) + 1)
            return pos, neg
        return 1.0, 1.0

    # -- reporting ----------------------------------------------------------

    def report(self) -> dict:
        r_tot_series = metrics.coherence(self.trace[: self.k + 1])
        r_tot = metrics.time_average(r_tot_series, self.dt)
        if self.avatar_idx >= 0:
            r_net_series = metrics.coherence(self.trace[: self.k + 1],
                                             self.participant_idx)
            r_net = metrics.time_average(r_net_series, self.dt)
        else:
            r_net = r_tot
        headline = "r_net" if self.config.condition in ("CA", "NA") else "r_tot"
        return {
            "condition": self.config.condition,
            "metric": headline,
            "value": float(r_net if headline == "r_net" else r_tot),
            "r_net": float(r_net),
            "r_tot": float(r_tot),
            "steps": int(self.k),
            "final": bool(self.finished),
            "dropped_inputs": int(self.drop_count),
            "invalid_inputs": int(self.invalid_count
                                  + (self._est.invalid_samples if self._est else 0)),
            "signal_lost_ticks": int(self.signal_lost_ticks),
        }

    def write_trace(self, path) -> None:
        cols = ["k", "t", "input_x"] + [f"theta_{b}" for b in self.ball_ids]
        if self.avatar_idx >= 0:
            cols.append("omega_a")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(self.k + 1):
                row = [str(k), repr(round(k * self.dt, 6)),
                       repr(self.input_trace[k])]
                row += [repr(v) for v in self.trace[k]]
                if self.avatar_idx >= 0:
                    row.append(repr(self.omega_a_trace[k]))
                fh.write(",".join(row) + "\n")

    # -- lockstep pacing ----------------------------------------------------

    def advance_for_input(self, t_ms: float) -> list:
        """Run ticks so sim time tracks the client clock; returns due frames.

        The first accepted sample anchors client ms to the current tick;
        later samples advance the simulation to their timestamp.
        """
        if not hasattr(self, "_anchor_ms"):
            self._anchor_ms = t_ms - self.k * self.dt * 1000.0
        target = int((t_ms - self._anchor_ms) / 1000.0 / self.dt)
        frames = []
        while self.k < min(target, self.n_steps):
            if self.frame_due():
                frames.append(self.make_frame())
            self.step()
        if self.finished and self.frame_due():
            frames.append(self.make_frame())
        return frames


# ---------------------------------------------------------------------------
# network layer
# ---------------------------------------------------------------------------


def _default_static_dir():
    env = os.environ.get("SYNCHRONY_FRONTEND")
    if env:
        return Path(env)
    repo = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return repo


def create_app(base_cfg: dict | None = None):
    """Build the FastAPI app; single live session, REST + WebSocket."""
    base = dict(SERVE_DEFAULT)
    base.update(base_cfg or {})
    app = FastAPI(title="synchrony live service")
    app.state.engine = None
    app.state.session_id = None
    app.state.reports = {}
    app.state.base_cfg = base

    def _engine_active() -> bool:
        eng = app.state.engine
        return eng is not None and not eng.finished

    @app.post("/session")
    async def create_session(overrides: dict | None = None):
        if _engine_active():
            return JSONResponse(status_code=409,
                                content={"error": "session-exists",
                                         "session_id": app.state.session_id})
        cfg = dict(app.state.base_cfg)
        cfg.update(overrides or {})
        try:
            sc = SessionConfig.from_dict(cfg)
            engine = SessionEngine(sc)
        except (ValueError, FileNotFoundError) as exc:
            return JSONResponse(status_code=422,
                                content={"error": "bad-config", "detail": str(exc)})
        sid = uuid.uuid4().hex[:12]
        app.state.engine = engine
        app.state.session_id = sid
        return {"session_id": sid, "ws_path": f"/session/{sid}/ws",
                "condition": sc.condition, "balls": engine.ball_ids}

    @app.get("/session/{sid}/report")
    async def get_report(sid: str):
        if sid in app.state.reports:
            return app.state.reports[sid]
        if sid == app.state.session_id and app.state.engine is not None:
            return app.state.engine.report()
        return JSONResponse(status_code=404, content={"error": "not-found"})

    async def _finish(engine, sid: str) -> dict:
        report = engine.report()
        out = app.state.base_cfg.get("out")
        if out:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            trace_path = out_dir / f"session_{sid}_trace.csv"
            engine.write_trace(trace_path)
            report["trace_path"] = str(trace_path)
        app.state.reports[sid] = report
        return report

    @app.websocket("/session/{sid}/ws")
    async def session_ws(ws: WebSocket, sid: str):
        import asyncio

        await ws.accept()
        engine = app.state.engine
        if engine is None or sid != app.state.session_id:
            await ws.send_json({"type": "error", "error": "not-found"})
            await ws.close()
            return
        try:
            hello = await ws.receive_json()
        except (WebSocketDisconnect, json.JSONDecodeError):
            return
        if not isinstance(hello, dict) or hello.get("type") != "hello":
            await ws.send_json({"type": "error", "error": "expected-hello"})
            await ws.close()
            return
        await ws.send_json({
            "type": "config", "session_id": sid,
            "condition": engine.config.condition,
            "balls": engine.ball_ids,
            "trial_seconds": engine.config.trial_seconds,
            "input_hz": engine.config.input_hz,
        })

        try:
            if engine.config.pacing == "lockstep":
                while not engine.finished:
                    msg = await ws.receive_json()
                    if msg.get("type") != "input":
                        continue
                    if engine.ingest(msg.get("t"), msg.get("x")):
                        for frame in engine.advance_for_input(float(msg["t"])):
                            await ws.send_json(frame)
                report = await _finish(engine, sid)
                await ws.send_json({"type": "end", "report": report})
            else:
                await _realtime_loop(ws, engine)
                report = await _finish(engine, sid)
                await ws.send_json({"type": "end", "report": report})
        except WebSocketDisconnect:
            log.info("client left session %s at tick %d", sid, engine.k)
        except RuntimeError:
            # websocket torn down mid-send; the report stays retrievable
            log.info("session %s socket closed early", sid)

    async def _realtime_loop(ws, engine):
        import asyncio
        import time as _time

        loop_start = _time.monotonic()

        async def receiver():
            while True:
                msg = await ws.receive_json()
                if msg.get("type") == "input":
                    engine.ingest(msg.get("t"), msg.get("x"))

        recv = asyncio.ensure_future(receiver())
        try:
            while not engine.finished:
                elapsed = _time.monotonic() - loop_start
                target = min(int(elapsed / engine.dt), engine.n_steps)
                while engine.k < target:
                    if engine.frame_due():
                        await ws.send_json(engine.make_frame())
                    engine.step()
                await asyncio.sleep(engine.dt / 2)
            if engine.frame_due():
                await ws.send_json(engine.make_frame())
        finally:
            recv.cancel()

    static_dir = Path(base.get("static_dir") or _default_static_dir())
    if static_dir.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="frontend")
    return app


def serve(cfg: dict) -> int:
    import uvicorn

    app = create_app(cfg)
    host = cfg.get("host", "127.0.0.1")
    port = int(cfg.get("port", 8000))
    log.info("serving on %s:%d", host, port)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0
