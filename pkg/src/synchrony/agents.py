"""Avatar controllers: the trained RL policy, a low-pass-follower baseline,
and a constant-frequency reference.

All three sit behind the controller interface used by model.simulate() and
the live session engine: ``decide(view, avatar) -> omega_a`` returns the
frequency the avatar applies during the current step, and ``reset(rng)``
reinitializes private state between runs.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels, dqn

ACTION_DELTAS = -0.5 + 0.1 * np.arange(11)
"""Frequency increments, index 0 -> -0.5 rad/s up to index 10 -> +0.5."""

OMEGA_MIN_DEFAULT = 2.0
OMEGA_MAX_DEFAULT = 6.0


def saturate(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def observe(phases, participant_ids, avatar_phase: float, omega_a: float) -> np.ndarray:
    """RL observation [arg q_a, 1 - |q_a|, omega_a].

    q_a is the mean phasor of the avatar-relative phases exp(i(theta_a -
    theta_i)) over the participants; a cancelled phasor reads angle 0.
    """
    parts = np.asarray(participant_ids, dtype=np.int64)
    if parts.shape[0] == 0:
        raise ValueError("observation needs at least one participant")
    theta = np.asarray(phases, dtype=np.float64)
    arg, mag = _kernels.group_phasor(float(avatar_phase), theta[parts])
    return np.array([arg, 1.0 - mag, omega_a])


def ca_action_index(
    observation, params: dqn.MlpParams, epsilon: float = 0.0, rng=None
) -> int:
    q = dqn.forward(params, observation)
    return dqn.select_action(q, epsilon, rng)


def ca_decide(observation, params: dqn.MlpParams, epsilon: float = 0.0, rng=None) -> float:
    """Frequency increment chosen by the policy; greedy when epsilon = 0."""
    return float(ACTION_DELTAS[ca_action_index(observation, params, epsilon, rng)])


def na_decide(participant_phase_velocities, filter_state: "NaController") -> float:
    """One filter update on the mean input velocity; returns the new omega_a."""
    u = float(np.mean(np.asarray(participant_phase_velocities, dtype=np.float64)))
    return filter_state._advance(u)


def fixed_agent(omega: float) -> "FixedController":
    return FixedController(omega)


class FixedController:
    """Emits one constant natural frequency forever."""

    def __init__(self, omega: float):
        if omega <= 0:
            raise ValueError("fixed frequency must be positive")
        self.omega = float(omega)
        self.last_action = None

    def reset(self, rng=None) -> None:
        pass

    def decide(self, view, avatar: int) -> float:
        return self.omega


class NaController:
    """Follows the low-passed mean phase velocity of the avatar's neighbours.

    Discrete pole a = exp(-2*pi*pole_hz*dt), unit DC gain, state seeded by
    the first input, so the output always lies between the extremes of the
    input history.  No saturation is applied.  `neighbors` restricts which
    participants are read; by default the avatar reads exactly the
    participants it is wired to.
    """

    def __init__(self, dt: float, pole_hz: float = 30.0, neighbors=None):
        if dt <= 0 or pole_hz <= 0:
            raise ValueError("need positive dt and pole frequency")
        self.pole_coef = math.exp(-2.0 * math.pi * pole_hz * dt)
        self.neighbors = None if neighbors is None else np.asarray(neighbors, dtype=np.int64)
        self.y = None
        self.last_action = None

    def reset(self, rng=None) -> None:
        self.y = None

    def _advance(self, u: float) -> float:
        self.y = u if self.y is None else self.pole_coef * self.y + (1.0 - self.pole_coef) * u
        return self.y

    def decide(self, view, avatar: int) -> float:
        if self.neighbors is not None:
            nbrs = self.neighbors
        else:
            row = view.graph.adjacency[avatar]
            nbrs = np.asarray([i for i in view.participant_ids if row[i] != 0.0],
                              dtype=np.int64)
        if nbrs.shape[0] == 0:
            raise ValueError("naive agent has no participant neighbours to read")
        pos = np.searchsorted(view.participant_ids, nbrs)
        return na_decide(view.participant_velocities[pos], self)


class CaController:
    """RL frequency-adaptation policy behind the controller interface.

    Dynamics during step k use omega_a(k); the increment picked at k lands
    at k+1 through the saturated update law, matching the training loop.
    """

    def __init__(
        self,
        params: dqn.MlpParams,
        omega_min: float = OMEGA_MIN_DEFAULT,
        omega_max: float = OMEGA_MAX_DEFAULT,
        omega_a0: float = None,
        epsilon: float = 0.0,
    ):
        if params is None:
            raise ValueError("CA controller needs trained network parameters")
        params.validate()
        if omega_min >= omega_max:
            raise ValueError("omega_min must be below omega_max")
        self.params = params
        self.omega_min = omega_min
        self.omega_max = omega_max
        self.omega_a0 = (omega_min + omega_max) / 2.0 if omega_a0 is None else float(omega_a0)
        self.epsilon = epsilon
        self.rng = None
        self.omega_a = self.omega_a0
        self.last_action = None

    def reset(self, rng=None) -> None:
        self.omega_a = self.omega_a0
        self.rng = rng
        self.last_action = None

    def decide(self, view, avatar: int) -> float:
        current = self.omega_a
        obs = observe(view.phases, view.participant_ids, view.phases[avatar], current)
        action = ca_action_index(obs, self.params, self.epsilon, self.rng)
        self.last_action = action
        self.omega_a = saturate(current + float(ACTION_DELTAS[action]),
                                self.omega_min, self.omega_max)
        return current


def controller_from_config(cfg: dict, dt: float):
    """Build a controller from scenario JSON: kind "ca" | "na" | "fixed".

    ca: {"checkpoint": path, "omega_min"?, "omega_max"?, "omega_a0"?}
    na: {"pole_hz"?, "neighbors"?}
    fixed: {"omega": value}
    """
    kind = cfg.get("kind")
    if kind == "fixed":
        return FixedController(float(cfg["omega"]))
    if kind == "na":
        return NaController(dt, pole_hz=float(cfg.get("pole_hz", 30.0)),
                            neighbors=cfg.get("neighbors"))
    if kind == "ca":
        if "checkpoint" not in cfg:
            raise ValueError("CA controller config needs a checkpoint path")
        params, _, _ = dqn.load_checkpoint(cfg["checkpoint"])
        return CaController(
            params,
            omega_min=float(cfg.get("omega_min", OMEGA_MIN_DEFAULT)),
            omega_max=float(cfg.get("omega_max", OMEGA_MAX_DEFAULT)),
            omega_a0=cfg.get("omega_a0"),
        )
    raise ValueError(f"unknown controller kind {kind!r}")
