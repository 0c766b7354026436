"""Coupled phase-oscillator group model and its seeded forward-Euler simulator.

Each node i carries a phase theta_i in (-pi, pi] and a natural frequency
omega_i > 0; the phase advances as

    theta_i(k+1) = wrap(theta_i(k) + dt * (omega_i(k) + c * sum_j A_ij
                   sin(theta_j(k) - theta_i(k))))

Nodes are partitioned into participants (frequencies come from a
FrequencyProcess) and avatars (frequencies come from bound controllers).
All randomness flows from one seed through named SeedSequence children, so a
run is reproducible bit for bit.  Generator family: numpy PCG64 spawned via
SeedSequence.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .graphs import GraphSpec, make_complete_graph, make_ring_graph

FREQ_FLOOR = 0.1
"""Lower clamp (rad/s) applied to every generated natural frequency."""


def wrap_angles(x):
    return _kernels.wrap_angles(x)


# ---------------------------------------------------------------------------
# frequency processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyProcess:
    """Per-participant natural-frequency generator.

    kind:
      constant          -- omega_i(k) = mean_i
      uniform-once      -- one draw per run from [mean_i - spread_i, mean_i + spread_i]
      gaussian-per-step -- fresh draw each step from N(mean_i, spread_i^2)

    All draws are clamped at FREQ_FLOOR to keep frequencies positive.
    """

    kind: str
    mean: np.ndarray
    spread: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("constant", "uniform-once", "gaussian-per-step"):
            raise ValueError(f"unknown frequency process kind {self.kind!r}")
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "mean", mean)
        if self.spread is None and self.kind != "constant":
            raise ValueError(f"{self.kind} needs a spread parameter")
        spread = (
            np.zeros_like(mean)
            if self.spread is None
            else np.broadcast_to(np.asarray(self.spread, dtype=np.float64), mean.shape).copy()
        )
        if np.any(spread < 0):
            raise ValueError("spread must be nonnegative")
        object.__setattr__(self, "spread", spread)

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    def draw_table(self, n_steps: int, rng: np.random.Generator) -> np.ndarray:
        """(n_steps, n) frequencies, one row per simulation step."""
        if self.kind == "constant":
            table = np.tile(self.mean, (n_steps, 1))
        elif self.kind == "uniform-once":
            once = self.mean + rng.uniform(-1.0, 1.0, size=self.n) * self.spread
            table = np.tile(once, (n_steps, 1))
        else:
            table = self.mean + rng.standard_normal((n_steps, self.n)) * self.spread
        return np.maximum(table, FREQ_FLOOR)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "mean": self.mean.tolist()}
        if self.kind != "constant":
            d["spread"] = self.spread.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyProcess":
        return cls(kind=d["kind"], mean=np.asarray(d["mean"], dtype=np.float64),
                   spread=None if d.get("spread") is None else np.asarray(d["spread"], dtype=np.float64))


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkState:
    """One instant of the full system: phases, frequencies, coupling, step index."""

    phases: np.ndarray
    frequencies: np.ndarray
    coupling: float
    k: int = 0

    def __post_init__(self):
        phases = wrap_angles(np.asarray(self.phases, dtype=np.float64))
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        if phases.shape != freqs.shape:
            raise ValueError("phases and frequencies must have equal length")
        if self.coupling < 0:
            raise ValueError("coupling must be nonnegative")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n(self) -> int:
        return self.phases.shape[0]


def euler_step(
    state: NetworkState,
    graph: GraphSpec,
    dt: float,
    frequency_overrides: np.ndarray | None = None,
) -> NetworkState:
    """One forward-Euler step; returns a new wrapped NetworkState at k+1."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if graph.n != state.n:
        raise ValueError(f"graph has {graph.n} nodes, state has {state.n}")
    omega = state.frequencies if frequency_overrides is None else np.asarray(
        frequency_overrides, dtype=np.float64
    )
    if omega.shape != state.phases.shape:
        raise ValueError("frequency override length mismatch")
    dtheta = _kernels.kuramoto_rhs(state.phases, omega, state.coupling, graph.adjacency)
    new_phases = wrap_angles(state.phases + dt * dtheta)
    return NetworkState(phases=new_phases, frequencies=omega, coupling=state.coupling, k=state.k + 1)


# ---------------------------------------------------------------------------
# simulation configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one run.

    initial_phases is either an explicit n-vector or a (low, high) tuple
    sampled uniformly per node.  participant_ids and avatar_ids must
    partition range(n).
    """

    dt: float
    duration: float
    graph: GraphSpec
    freq_process: FrequencyProcess
    coupling: float
    rng_seed: int
    participant_ids: tuple = ()
    avatar_ids: tuple = ()
    initial_phases: object = (np.pi / 4, 3 * np.pi / 4)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.duration < self.dt:
            raise ValueError("duration must be at least one step")
        if self.coupling < 0:
            raise ValueError("coupling must be nonnegative")
        n = self.graph.n
        parts = tuple(sorted(int(i) for i in self.participant_ids))
        avs = tuple(sorted(int(i) for i in self.avatar_ids))
        if not parts:
            parts = tuple(i for i in range(n) if i not in avs)
        if sorted(parts + avs) != list(range(n)):
            raise ValueError("participant_ids and avatar_ids must partition the node set")
        if self.freq_process.n != len(parts):
            raise ValueError(
                f"frequency process covers {self.freq_process.n} nodes, "
                f"but there are {len(parts)} participants"
            )
        object.__setattr__(self, "participant_ids", parts)
        object.__setattr__(self, "avatar_ids", avs)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def draw_initial_phases(self, rng: np.random.Generator) -> np.ndarray:
        if isinstance(self.initial_phases, (tuple, list)) and len(self.initial_phases) == 2 \
                and np.isscalar(self.initial_phases[0]):
            low, high = self.initial_phases
            return wrap_angles(rng.uniform(low, high, size=self.graph.n))
        values = np.asarray(self.initial_phases, dtype=np.float64)
        if values.shape != (self.graph.n,):
            raise ValueError(f"initial phases must have length {self.graph.n}")
        return wrap_angles(values)

    def to_dict(self) -> dict:
        init = self.initial_phases
        if isinstance(init, (tuple, list)) and len(init) == 2 and np.isscalar(init[0]):
            init_d = {"kind": "uniform", "low": float(init[0]), "high": float(init[1])}
        else:
            init_d = {"kind": "explicit", "values": np.asarray(init, dtype=float).tolist()}
        return {
            "dt": self.dt,
            "duration": self.duration,
            "coupling": self.coupling,
            "rng_seed": self.rng_seed,
            "graph": {"kind": "explicit", "adjacency": self.graph.to_lists()},
            "frequencies": self.freq_process.to_dict(),
            "initial_phases": init_d,
            "participants": list(self.participant_ids),
            "avatars": list(self.avatar_ids),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def sha256(self) -> str:
        """Hash of the canonical JSON form; recorded in output headers."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        g = d["graph"]
        if g.get("kind") == "ring":
            graph = make_ring_graph(int(g["n"]))
        elif g.get("kind") == "complete":
            graph = make_complete_graph(int(g["n"]))
        else:
            graph = GraphSpec.from_lists(g["adjacency"])
        init = d.get("initial_phases", {"kind": "uniform", "low": np.pi / 4, "high": 3 * np.pi / 4})
        if init["kind"] == "uniform":
            initial = (float(init["low"]), float(init["high"]))
        else:
            initial = np.asarray(init["values"], dtype=np.float64)
        return cls(
            dt=float(d["dt"]),
            duration=float(d["duration"]),
            coupling=float(d["coupling"]),
            rng_seed=int(d["rng_seed"]),
            graph=graph,
            freq_process=FrequencyProcess.from_dict(d["frequencies"]),
            participant_ids=tuple(d.get("participants", ())),
            avatar_ids=tuple(d.get("avatars", ())),
            initial_phases=initial,
        )

    @classmethod
    def from_json(cls, text_or_path) -> "SimConfig":
        text = text_or_path
        if "\n" not in str(text_or_path) and str(text_or_path).endswith(".json"):
            with open(text_or_path) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Simulation output: phases/frequencies at k = 0..K, one action row per avatar.

    frequencies[k] holds the values used to advance step k; the final row
    repeats the last applied values so both arrays align with times().
    """

    dt: float
    phases: np.ndarray
    frequencies: np.ndarray
    participant_ids: tuple
    avatar_ids: tuple
    actions: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.phases.shape[0] - 1

    @property
    def n(self) -> int:
        return self.phases.shape[1]

    def times(self) -> np.ndarray:
        return np.arange(self.phases.shape[0]) * self.dt

    def to_csv(self, path) -> None:
        n = self.n
        header = "k,t," + ",".join(f"theta_{i}" for i in range(n)) + "," + ",".join(
            f"omega_{i}" for i in range(n)
        )
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for k in range(self.phases.shape[0]):
                row = [str(k), repr(k * self.dt)]
                row += [repr(float(v)) for v in self.phases[k]]
                row += [repr(float(v)) for v in self.frequencies[k]]
                fh.write(",".join(row) + "\n")


def simulate(config: SimConfig, agents=None) -> Trajectory:
    """Run the full scenario; deterministic for a given config.rng_seed.

    `agents` maps avatar node index -> controller (anything with a
    ``decide(view, avatar) -> float`` method and an optional ``reset(rng)``).
    Controllers see a StepView with the current phases and the participants'
    true phase velocities, and return the avatar frequency to apply this step.
    """
    agents = dict(agents or {})
    for avatar in config.avatar_ids:
        if avatar not in agents:
            raise ValueError(f"avatar node {avatar} has no bound controller")
    for bound in agents:
        if bound not in config.avatar_ids:
            raise ValueError(f"controller bound to non-avatar node {bound}")

    ss = np.random.SeedSequence(config.rng_seed)
    init_rng, freq_rng, agent_seed = [np.random.default_rng(s) for s in ss.spawn(3)]

    theta = config.draw_initial_phases(init_rng)
    n_steps = config.n_steps
    parts = np.asarray(config.participant_ids, dtype=np.int64)
    freq_table = config.freq_process.draw_table(n_steps, freq_rng)

    for avatar in sorted(agents):
        ctrl = agents[avatar]
        if hasattr(ctrl, "reset"):
            ctrl.reset(agent_seed)

    n = config.graph.n
    adj = config.graph.adjacency
    phases = np.empty((n_steps + 1, n))
    freqs = np.empty((n_steps + 1, n))
    phases[0] = theta
    actions = {a: [] for a in config.avatar_ids}

    omega = np.zeros(n)
    for k in range(n_steps):
        omega[:] = 0.0
        omega[parts] = freq_table[k]
        dtheta = _kernels.kuramoto_rhs(theta, omega, config.coupling, adj)
        view = StepView(
            k=k,
            dt=config.dt,
            phases=theta,
            participant_velocities=dtheta[parts],
            participant_ids=parts,
            graph=config.graph,
        )
        for avatar in sorted(agents):
            om_a = float(agents[avatar].decide(view, avatar))
            omega[avatar] = om_a
            dtheta[avatar] += om_a
            act = getattr(agents[avatar], "last_action", None)
            actions[avatar].append(om_a if act is None else act)
        freqs[k] = omega
        theta = wrap_angles(theta + config.dt * dtheta)
        phases[k + 1] = theta
    freqs[n_steps] = freqs[n_steps - 1] if n_steps else 0.0

    return Trajectory(
        dt=config.dt,
        phases=phases,
        frequencies=freqs,
        participant_ids=config.participant_ids,
        avatar_ids=config.avatar_ids,
        actions={a: np.asarray(v) for a, v in actions.items()},
    )


@dataclass(frozen=True)
class StepView:
    """What a controller may observe at one step of simulate()."""

    k: int
    dt: float
    phases: np.ndarray
    participant_velocities: np.ndarray
    participant_ids: np.ndarray
    graph: GraphSpec


def relabel(config: SimConfig, permutation) -> SimConfig:
    """Apply a node permutation to graph, ids, and explicit initial phases.

    permutation[i] is the new index of old node i.  Only valid for explicit
    initial phases and per-node frequency parameters.
    """
    perm = np.asarray(permutation, dtype=np.int64)
    n = config.graph.n
    inv = np.empty_like(perm)
    inv[perm] = np.arange(n)
    adj = config.graph.adjacency[np.ix_(inv, inv)]
    init = np.asarray(config.initial_phases, dtype=np.float64)[inv]
    parts_new = tuple(sorted(int(perm[i]) for i in config.participant_ids))
    avs_new = tuple(sorted(int(perm[i]) for i in config.avatar_ids))
    old_parts = np.asarray(config.participant_ids, dtype=np.int64)
    order = np.argsort(perm[old_parts])
    fp = config.freq_process
    fp_new = FrequencyProcess(kind=fp.kind, mean=fp.mean[order],
                              spread=None if fp.kind == "constant" else fp.spread[order])
    return replace(
        config,
        graph=GraphSpec(n=n, adjacency=adj),
        initial_phases=init,
        participant_ids=parts_new,
        avatar_ids=avs_new,
        freq_process=fp_new,
    )
