"""Minimal deep Q-learning stack sized for the frequency-adaptation task.

Q-network: MLP 3 -> 128 -> 64 -> 11, rectified-linear hidden layers, linear
output.  Input is the avatar observation [arg q_a, 1 - |q_a|, omega_a]; the
11 outputs are values of frequency increments delta = -0.5 + 0.1 * index.
Learning is standard DQN: uniform replay, epsilon-greedy behaviour, MSE on
the taken action against a hard-updated target network, Adam.

Everything is deterministic for a fixed seed: one SeedSequence fans out into
separate init / action / environment / sampling streams.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels

LAYER_SIZES = (3, 128, 64, 11)


@dataclass
class DqnHyper:
    epsilon: float = 0.1
    learning_rate: float = 0.001
    gamma: float = 0.9
    batch_size: int = 32
    buffer_capacity: int = 100_000
    target_sync: int = 500
    n_actions: int = 11
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("need batch_size >= 1 and capacity >= batch_size")


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass
class MlpParams:
    """Network weights; W matrices are (fan_in, fan_out), x @ W + b."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @property
    def layer_sizes(self) -> tuple:
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1], self.w3.shape[1])

    def arrays(self) -> tuple:
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)

    def copy(self) -> "MlpParams":
        return MlpParams(*(a.copy() for a in self.arrays()))

    def validate(self) -> None:
        w1, b1, w2, b2, w3, b3 = self.arrays()
        if w1.shape[1] != b1.shape[0] or w2.shape[1] != b2.shape[0] or w3.shape[1] != b3.shape[0]:
            raise ValueError("bias lengths must match weight output dims")
        if w1.shape[1] != w2.shape[0] or w2.shape[1] != w3.shape[0]:
            raise ValueError("layer shapes do not chain")
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise ValueError("non-finite parameter entries")


def init_mlp(rng: np.random.Generator, layer_sizes=LAYER_SIZES) -> MlpParams:
    """Uniform fan-in-scaled weights, U[-1/sqrt(fan_in), 1/sqrt(fan_in)]; zero biases."""
    if len(layer_sizes) != 4:
        raise ValueError("expected four layer sizes")
    ws, bs = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        ws.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        bs.append(np.zeros(n_out))
    return MlpParams(ws[0], bs[0], ws[1], bs[1], ws[2], bs[2])


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Q-values for one observation."""
    return _kernels.q_forward(*params.arrays(), np.asarray(x, dtype=np.float64))


def batch_forward(params: MlpParams, xs: np.ndarray) -> np.ndarray:
    return _kernels.q_batch_forward(*params.arrays(), np.asarray(xs, dtype=np.float64))


def backward(params: MlpParams, xs, actions, targets):
    """Gradients of mean (Q(s,a) - y)^2 over the batch, taken actions only.

    Returns (loss, dw1, db1, dw2, db2, dw3, db3).
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.shape[0] == 0:
        raise ValueError("empty batch")
    return _kernels.q_batch_grads(
        *params.arrays(),
        xs,
        np.asarray(actions, dtype=np.int64),
        np.asarray(targets, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def for_arrays(cls, arrays) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in arrays],
                   v=[np.zeros_like(a) for a in arrays])


def adam_step(
    arrays,
    grads,
    state: AdamState,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """Standard bias-corrected Adam; mutates arrays and state in place."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        a -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return arrays


def select_action(q_values: np.ndarray, epsilon: float, rng: np.random.Generator = None) -> int:
    """Epsilon-greedy over the value vector; greedy ties go to the lowest index."""
    if epsilon > 0.0:
        if rng is None:
            raise ValueError("epsilon > 0 needs an rng")
        if rng.random() < epsilon:
            return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


# ---------------------------------------------------------------------------
# replay buffer
# ---------------------------------------------------------------------------


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform with-replacement sampling."""

    def __init__(self, capacity: int, state_dim: int = 3):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.empty((capacity, state_dim))
        self.actions = np.empty(capacity, dtype=np.int64)
        self.rewards = np.empty(capacity)
        self.next_states = np.empty((capacity, state_dim))
        self.dones = np.empty(capacity, dtype=np.float64)
        self.size = 0
        self.head = 0

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state, done) -> None:
        i = self.head
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = 1.0 if done else 0.0
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


# ---------------------------------------------------------------------------
# training environment
# ---------------------------------------------------------------------------


class KuramotoTrainingEnv:
    """Fixed-horizon episodes of a small all-to-all group plus the avatar.

    Participant frequencies are drawn once per episode from
    U[omega_low, omega_high]; every initial phase from U[theta_low, theta_high].
    Per step: dynamics advance using the avatar's current omega_a, then the
    chosen increment applies through the saturated update law, so an action
    first affects motion one step later.  Reward is r_tot^2 of the post-step
    phases; episodes terminate only at the horizon.
    """

    def __init__(
        self,
        n_participants: int = 2,
        coupling: float = 1.25,
        dt: float = 0.01,
        omega_low: float = 3.4,
        omega_high: float = 4.6,
        theta_low: float = np.pi / 4,
        theta_high: float = 3 * np.pi / 4,
        omega_a0: float = 4.0,
        omega_min: float = 2.0,
        omega_max: float = 6.0,
        episode_steps: int = 500,
    ):
        if n_participants < 1:
            raise ValueError("need at least one participant")
        self.n_p = n_participants
        self.n = n_participants + 1
        self.avatar = n_participants
        self.participants = np.arange(n_participants, dtype=np.int64)
        self.adj = np.ones((self.n, self.n)) - np.eye(self.n)
        self.coupling = coupling
        self.dt = dt
        self.omega_low, self.omega_high = omega_low, omega_high
        self.theta_low, self.theta_high = theta_low, theta_high
        self.omega_a0 = omega_a0
        self.omega_min, self.omega_max = omega_min, omega_max
        self.episode_steps = episode_steps
        self.theta = None
        self.omega = np.empty(self.n)
        self.omega_a = omega_a0
        self.k = 0

    @property
    def state_dim(self) -> int:
        return 3

    def _observe(self) -> np.ndarray:
        arg, mag = _kernels.group_phasor(self.theta[self.avatar], self.theta[self.participants])
        return np.array([arg, 1.0 - mag, self.omega_a])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.omega[self.participants] = rng.uniform(self.omega_low, self.omega_high, self.n_p)
        self.theta = rng.uniform(self.theta_low, self.theta_high, self.n)
        self.omega_a = self.omega_a0
        self.k = 0
        return self._observe()

    def step(self, action: int):
        if self.theta is None:
            raise ValueError("reset the environment before stepping")
        self.omega[self.avatar] = self.omega_a
        dtheta = _kernels.kuramoto_rhs(self.theta, self.omega, self.coupling, self.adj)
        self.theta = _kernels.wrap_angles(self.theta + self.dt * dtheta)
        delta = -0.5 + 0.1 * int(action)
        self.omega_a = min(max(self.omega_a + delta, self.omega_min), self.omega_max)
        self.k += 1
        q = np.exp(1j * self.theta).mean()
        reward = float(np.abs(q) ** 2)
        return self._observe(), reward, self.k >= self.episode_steps


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


def train(
    env: KuramotoTrainingEnv,
    hyper: DqnHyper = None,
    episodes: int = 500,
    seed: int = 0,
    layer_sizes=LAYER_SIZES,
    initial_params: MlpParams = None,
) -> tuple:
    """Train a Q-network on the environment; returns (params, log).

    The log has one entry per episode: undiscounted return, buffer size, and
    the last minibatch loss.  Parameter finiteness is asserted at every
    target sync, so divergence fails fast instead of producing NaN policies.
    Passing initial_params continues from existing weights (fresh replay
    buffer and optimizer state) instead of a random initialization.
    """
    hyper = hyper or DqnHyper()
    ss = np.random.SeedSequence(seed)
    init_rng, act_rng, env_rng, buf_rng = [np.random.default_rng(s) for s in ss.spawn(4)]

    if initial_params is not None:
        if initial_params.layer_sizes != tuple(layer_sizes):
            raise ValueError(
                f"initial_params layers {initial_params.layer_sizes} "
                f"do not match requested {tuple(layer_sizes)}")
        params = initial_params.copy()
    else:
        params = init_mlp(init_rng, layer_sizes)
    target = params.copy()
    adam = AdamState.for_arrays(params.arrays())
    buf = ReplayBuffer(hyper.buffer_capacity, state_dim=layer_sizes[0])
    log = {"episode_returns": [], "buffer_sizes": [], "losses": []}

    step_count = 0
    for _ in range(episodes):
        obs = env.reset(env_rng)
        ep_return = 0.0
        last_loss = np.nan
        done = False
        while not done:
            q = forward(params, obs)
            action = select_action(q, hyper.epsilon, act_rng)
            next_obs, reward, done = env.step(action)
            buf.push(obs, action, reward, next_obs, done)
            ep_return += reward
            obs = next_obs

            if buf.size >= hyper.batch_size:
                s, a, r, s2, d = buf.sample(hyper.batch_size, buf_rng)
                q_next = batch_forward(target, s2)
                targets = r + hyper.gamma * q_next.max(axis=1) * (1.0 - d)
                out = backward(params, s, a, targets)
                last_loss = out[0]
                adam_step(params.arrays(), out[1:], adam, hyper.learning_rate,
                          hyper.adam_beta1, hyper.adam_beta2, hyper.adam_eps)

            step_count += 1
            if step_count % hyper.target_sync == 0:
                params.validate()
                target = params.copy()

        log["episode_returns"].append(ep_return)
        log["buffer_sizes"].append(buf.size)
        log["losses"].append(float(last_loss))
    return params, log


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, params: MlpParams, hyper: DqnHyper, seed: int, episodes: int) -> None:
    """JSON checkpoint; floats survive the round trip bit for bit."""
    doc = {
        "layer_sizes": list(params.layer_sizes),
        "weights": [params.w1.tolist(), params.w2.tolist(), params.w3.tolist()],
        "biases": [params.b1.tolist(), params.b2.tolist(), params.b3.tolist()],
        "hyper": asdict(hyper),
        "training_meta": {"seed": seed, "episodes": episodes},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple:
    """Returns (params, hyper, training_meta)."""
    with open(path) as fh:
        doc = json.load(fh)
    ws = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
    bs = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    params = MlpParams(ws[0], bs[0], ws[1], bs[1], ws[2], bs[2])
    params.validate()
    if list(params.layer_sizes) != list(doc["layer_sizes"]):
        raise ValueError("checkpoint layer_sizes disagree with stored arrays")
    return params, DqnHyper(**doc["hyper"]), doc["training_meta"]
