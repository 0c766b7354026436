"""Hot numerical kernels: coupled-phase dynamics rollouts and the Q-network math.

Every kernel exists in two flavours: a vectorised numpy implementation and a
loop-style numba ``@njit`` implementation.  The numba flavour is selected at
import time unless the environment variable ``SYNCHRONY_NO_NUMBA`` is set (or
numba is not installed), in which case the numpy path is used.  Both flavours
agree to floating-point tolerance; ``benchmarks/bench_kernels.py`` compares
their speed.

Conventions shared by all callers:

* phases are kept in balanced form, wrapped to (-pi, pi];
* adjacency matrices are dense float64 with entries in {0.0, 1.0};
* ``omega_table`` rows hold pre-drawn natural frequencies, one row per step,
  so kernels never touch an RNG and both flavours replay identical noise;
* Q-network weights use the ``x @ W + b`` convention, W of shape (in, out).
"""

import os

import numpy as np

_flag = os.environ.get("SYNCHRONY_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

NUMBA_ACTIVE = False
if not NUMBA_DISABLED:
    try:
        from numba import njit as _njit

        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ACTIVE = False

TWO_PI = 2.0 * np.pi


def wrap_angles(x):
    """Wrap angles (array or scalar) to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=np.float64), TWO_PI)


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------


def kuramoto_rhs_numpy(theta, omega, coupling, adj):
    """d(theta)/dt for every node: omega_i + c * sum_j A_ij sin(theta_j - theta_i)."""
    diff = np.sin(theta[None, :] - theta[:, None])
    return omega + coupling * (adj * diff).sum(axis=1)


def euler_rollout_numpy(theta0, omega_table, coupling, adj, dt):
    """Integrate all nodes for omega_table.shape[0] steps; returns (K+1, n) phases."""
    n_steps = omega_table.shape[0]
    phases = np.empty((n_steps + 1, theta0.shape[0]))
    phases[0] = theta0
    theta = theta0.copy()
    for k in range(n_steps):
        dtheta = kuramoto_rhs_numpy(theta, omega_table[k], coupling, adj)
        theta = wrap_angles(theta + dt * dtheta)
        phases[k + 1] = theta
    return phases


def q_forward_numpy(w1, b1, w2, b2, w3, b3, x):
    h1 = np.maximum(x @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def q_batch_forward_numpy(w1, b1, w2, b2, w3, b3, xs):
    h1 = np.maximum(xs @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def q_batch_grads_numpy(w1, b1, w2, b2, w3, b3, xs, actions, targets):
    """Gradients of mean squared error on the taken-action outputs.

    Returns (loss, dw1, db1, dw2, db2, dw3, db3).
    """
    batch = xs.shape[0]
    z1 = xs @ w1 + b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0.0)
    q = h2 @ w3 + b3

    rows = np.arange(batch)
    err = q[rows, actions] - targets
    loss = float(np.mean(err**2))

    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / batch
    dw3 = h2.T @ dq
    db3 = dq.sum(axis=0)
    dh2 = dq @ w3.T
    dh2[z2 <= 0.0] = 0.0
    dw2 = h1.T @ dh2
    db2 = dh2.sum(axis=0)
    dh1 = dh2 @ w2.T
    dh1[z1 <= 0.0] = 0.0
    dw1 = xs.T @ dh1
    db1 = dh1.sum(axis=0)
    return loss, dw1, db1, dw2, db2, dw3, db3


def group_phasor_numpy(theta_avatar, theta_participants):
    """Mean phasor of exp(i*(theta_a - theta_i)); returns (arg, magnitude).

    A cancelled phasor (magnitude below 1e-12) reports arg 0 by convention.
    """
    d = theta_avatar - theta_participants
    re = float(np.mean(np.cos(d)))
    im = float(np.mean(np.sin(d)))
    mag = np.hypot(re, im)
    arg = np.arctan2(im, re) if mag > 1e-12 else 0.0
    return arg, mag


def rollout_ca_numpy(
    theta0,
    omega_table,
    coupling,
    adj,
    dt,
    avatar,
    participants,
    w1,
    b1,
    w2,
    b2,
    w3,
    b3,
    omega_a0,
    omega_min,
    omega_max,
):
    """Greedy RL avatar in the loop; returns (phases (K+1,n), omega_a (K+1,), actions (K,)).

    Dynamics at step k use omega_a(k); the chosen increment only takes effect
    at k+1 through the saturated update law.
    """
    n_steps = omega_table.shape[0]
    n = theta0.shape[0]
    phases = np.empty((n_steps + 1, n))
    omega_a_trace = np.empty(n_steps + 1)
    actions = np.empty(n_steps, dtype=np.int64)
    phases[0] = theta0
    theta = theta0.copy()
    omega_a = float(omega_a0)
    omega = np.empty(n)
    for k in range(n_steps):
        omega_a_trace[k] = omega_a
        arg, mag = group_phasor_numpy(theta[avatar], theta[participants])
        x = np.array([arg, 1.0 - mag, omega_a])
        qv = q_forward_numpy(w1, b1, w2, b2, w3, b3, x)
        a = int(np.argmax(qv))
        actions[k] = a

        omega[participants] = omega_table[k]
        omega[avatar] = omega_a
        theta = wrap_angles(theta + dt * kuramoto_rhs_numpy(theta, omega, coupling, adj))
        phases[k + 1] = theta

        delta = -0.5 + 0.1 * a
        omega_a = min(max(omega_a + delta, omega_min), omega_max)
    omega_a_trace[n_steps] = omega_a
    return phases, omega_a_trace, actions


def rollout_na_numpy(
    theta0,
    omega_table,
    coupling,
    adj,
    dt,
    avatar,
    participants,
    neighbors,
    pole_coef,
):
    """Naive low-pass-filter avatar; returns (phases (K+1,n), omega_a (K+1,)).

    The filter tracks the mean true phase velocity of the avatar's neighbours;
    its state is seeded by the first input, so omega_a(k) is the filter output
    at every step.  Neighbour velocities do not depend on the avatar's own
    frequency, only on its phase, so a single RHS evaluation per step suffices.
    """
    n_steps = omega_table.shape[0]
    n = theta0.shape[0]
    phases = np.empty((n_steps + 1, n))
    omega_a_trace = np.empty(n_steps + 1)
    phases[0] = theta0
    theta = theta0.copy()
    omega = np.empty(n)
    y = 0.0
    for k in range(n_steps):
        omega[participants] = omega_table[k]
        omega[avatar] = 0.0
        dtheta = kuramoto_rhs_numpy(theta, omega, coupling, adj)
        u = float(np.mean(dtheta[neighbors]))
        y = u if k == 0 else pole_coef * y + (1.0 - pole_coef) * u
        omega_a_trace[k] = y

        dtheta[avatar] += y
        theta = wrap_angles(theta + dt * dtheta)
        phases[k + 1] = theta
    omega_a_trace[n_steps] = omega_a_trace[n_steps - 1]
    return phases, omega_a_trace


# ---------------------------------------------------------------------------
# numba flavour (loop style; compiled only when active)
# ---------------------------------------------------------------------------

if NUMBA_ACTIVE:

    @_njit(cache=True)
    def _wrap_scalar(x):
        return np.pi - ((np.pi - x) % TWO_PI)

    @_njit(cache=True)
    def kuramoto_rhs_jit(theta, omega, coupling, adj):
        n = theta.shape[0]
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if adj[i, j] != 0.0:
                    acc += np.sin(theta[j] - theta[i])
            out[i] = omega[i] + coupling * acc
        return out

    @_njit(cache=True)
    def euler_rollout_jit(theta0, omega_table, coupling, adj, dt):
        n_steps = omega_table.shape[0]
        n = theta0.shape[0]
        phases = np.empty((n_steps + 1, n))
        theta = theta0.copy()
        for i in range(n):
            phases[0, i] = theta[i]
        for k in range(n_steps):
            dtheta = kuramoto_rhs_jit(theta, omega_table[k], coupling, adj)
            for i in range(n):
                theta[i] = _wrap_scalar(theta[i] + dt * dtheta[i])
                phases[k + 1, i] = theta[i]
        return phases

    @_njit(cache=True)
    def q_forward_jit(w1, b1, w2, b2, w3, b3, x):
        n1 = w1.shape[1]
        n2 = w2.shape[1]
        n3 = w3.shape[1]
        h1 = np.empty(n1)
        for j in range(n1):
            acc = b1[j]
            for i in range(x.shape[0]):
                acc += x[i] * w1[i, j]
            h1[j] = acc if acc > 0.0 else 0.0
        h2 = np.empty(n2)
        for j in range(n2):
            acc = b2[j]
            for i in range(n1):
                acc += h1[i] * w2[i, j]
            h2[j] = acc if acc > 0.0 else 0.0
        out = np.empty(n3)
        for j in range(n3):
            acc = b3[j]
            for i in range(n2):
                acc += h2[i] * w3[i, j]
            out[j] = acc
        return out

    @_njit(cache=True)
    def _relu_add_bias(z, b):
        # in place: z <- max(z + b, 0); returns pre-activation copy
        pre = np.empty_like(z)
        for i in range(z.shape[0]):
            for j in range(z.shape[1]):
                v = z[i, j] + b[j]
                pre[i, j] = v
                z[i, j] = v if v > 0.0 else 0.0
        return pre

    @_njit(cache=True)
    def q_batch_forward_jit(w1, b1, w2, b2, w3, b3, xs):
        # np.dot dispatches to BLAS; everything is kept C-contiguous
        h1 = np.dot(xs, w1)
        _relu_add_bias(h1, b1)
        h2 = np.dot(h1, w2)
        _relu_add_bias(h2, b2)
        out = np.dot(h2, w3)
        for i in range(out.shape[0]):
            for j in range(out.shape[1]):
                out[i, j] += b3[j]
        return out

    @_njit(cache=True)
    def q_batch_grads_jit(w1, b1, w2, b2, w3, b3, xs, actions, targets):
        batch = xs.shape[0]
        n2 = w2.shape[1]
        n3 = w3.shape[1]
        h1 = np.dot(xs, w1)
        z1 = _relu_add_bias(h1, b1)
        h2 = np.dot(h1, w2)
        z2 = _relu_add_bias(h2, b2)

        # loss touches only the taken-action output of each sample
        loss = 0.0
        dz3 = np.zeros((batch, n3))
        for b in range(batch):
            a = actions[b]
            qa = b3[a]
            for i in range(n2):
                qa += h2[b, i] * w3[i, a]
            err = qa - targets[b]
            loss += err * err
            dz3[b, a] = 2.0 * err / batch

        dw3 = np.dot(h2.T, dz3)
        db3 = dz3.sum(axis=0)
        dh2 = np.dot(dz3, w3.T)
        for i in range(batch):
            for j in range(n2):
                if z2[i, j] <= 0.0:
                    dh2[i, j] = 0.0
        dw2 = np.dot(h1.T, dh2)
        db2 = dh2.sum(axis=0)
        dh1 = np.dot(dh2, w2.T)
        for i in range(batch):
            for j in range(w1.shape[1]):
                if z1[i, j] <= 0.0:
                    dh1[i, j] = 0.0
        dw1 = np.dot(xs.T, dh1)
        db1 = dh1.sum(axis=0)
        return loss / batch, dw1, db1, dw2, db2, dw3, db3

    @_njit(cache=True)
    def group_phasor_jit(theta_avatar, theta_participants):
        m = theta_participants.shape[0]
        re = 0.0
        im = 0.0
        for i in range(m):
            d = theta_avatar - theta_participants[i]
            re += np.cos(d)
            im += np.sin(d)
        re /= m
        im /= m
        mag = np.hypot(re, im)
        arg = np.arctan2(im, re) if mag > 1e-12 else 0.0
        return arg, mag

    @_njit(cache=True)
    def rollout_ca_jit(
        theta0,
        omega_table,
        coupling,
        adj,
        dt,
        avatar,
        participants,
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        omega_a0,
        omega_min,
        omega_max,
    ):
        n_steps = omega_table.shape[0]
        n = theta0.shape[0]
        phases = np.empty((n_steps + 1, n))
        omega_a_trace = np.empty(n_steps + 1)
        actions = np.empty(n_steps, dtype=np.int64)
        theta = theta0.copy()
        for i in range(n):
            phases[0, i] = theta[i]
        omega = np.empty(n)
        omega_a = omega_a0
        x = np.empty(3)
        for k in range(n_steps):
            omega_a_trace[k] = omega_a
            arg, mag = group_phasor_jit(theta[avatar], theta[participants])
            x[0] = arg
            x[1] = 1.0 - mag
            x[2] = omega_a
            qv = q_forward_jit(w1, b1, w2, b2, w3, b3, x)
            a = 0
            best = qv[0]
            for j in range(1, qv.shape[0]):
                if qv[j] > best:
                    best = qv[j]
                    a = j
            actions[k] = a

            for idx in range(participants.shape[0]):
                omega[participants[idx]] = omega_table[k, idx]
            omega[avatar] = omega_a
            dtheta = kuramoto_rhs_jit(theta, omega, coupling, adj)
            for i in range(n):
                theta[i] = _wrap_scalar(theta[i] + dt * dtheta[i])
                phases[k + 1, i] = theta[i]

            delta = -0.5 + 0.1 * a
            omega_a = omega_a + delta
            if omega_a < omega_min:
                omega_a = omega_min
            elif omega_a > omega_max:
                omega_a = omega_max
        omega_a_trace[n_steps] = omega_a
        return phases, omega_a_trace, actions

    @_njit(cache=True)
    def rollout_na_jit(
        theta0,
        omega_table,
        coupling,
        adj,
        dt,
        avatar,
        participants,
        neighbors,
        pole_coef,
    ):
        n_steps = omega_table.shape[0]
        n = theta0.shape[0]
        phases = np.empty((n_steps + 1, n))
        omega_a_trace = np.empty(n_steps + 1)
        theta = theta0.copy()
        for i in range(n):
            phases[0, i] = theta[i]
        omega = np.empty(n)
        y = 0.0
        for k in range(n_steps):
            for idx in range(participants.shape[0]):
                omega[participants[idx]] = omega_table[k, idx]
            omega[avatar] = 0.0
            dtheta = kuramoto_rhs_jit(theta, omega, coupling, adj)
            u = 0.0
            for idx in range(neighbors.shape[0]):
                u += dtheta[neighbors[idx]]
            u /= neighbors.shape[0]
            y = u if k == 0 else pole_coef * y + (1.0 - pole_coef) * u
            omega_a_trace[k] = y

            dtheta[avatar] += y
            for i in range(n):
                theta[i] = _wrap_scalar(theta[i] + dt * dtheta[i])
                phases[k + 1, i] = theta[i]
        omega_a_trace[n_steps] = omega_a_trace[n_steps - 1]
        return phases, omega_a_trace


NUMPY_IMPLS = {
    "kuramoto_rhs": kuramoto_rhs_numpy,
    "euler_rollout": euler_rollout_numpy,
    "q_forward": q_forward_numpy,
    "q_batch_forward": q_batch_forward_numpy,
    "q_batch_grads": q_batch_grads_numpy,
    "group_phasor": group_phasor_numpy,
    "rollout_ca": rollout_ca_numpy,
    "rollout_na": rollout_na_numpy,
}

if NUMBA_ACTIVE:
    JIT_IMPLS = {
        "kuramoto_rhs": kuramoto_rhs_jit,
        "euler_rollout": euler_rollout_jit,
        "q_forward": q_forward_jit,
        "q_batch_forward": q_batch_forward_jit,
        "q_batch_grads": q_batch_grads_jit,
        "group_phasor": group_phasor_jit,
        "rollout_ca": rollout_ca_jit,
        "rollout_na": rollout_na_jit,
    }
    _ACTIVE = JIT_IMPLS
else:
    JIT_IMPLS = {}
    _ACTIVE = NUMPY_IMPLS

kuramoto_rhs = _ACTIVE["kuramoto_rhs"]
euler_rollout = _ACTIVE["euler_rollout"]
q_forward = _ACTIVE["q_forward"]
q_batch_forward = _ACTIVE["q_batch_forward"]
q_batch_grads = _ACTIVE["q_batch_grads"]
group_phasor = _ACTIVE["group_phasor"]
rollout_ca = _ACTIVE["rollout_ca"]
rollout_na = _ACTIVE["rollout_na"]

BACKEND = "numba" if NUMBA_ACTIVE else "numpy"
