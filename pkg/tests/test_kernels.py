"""Cross-checks between the two kernel flavours.

Each hot kernel ships in a vectorised numpy form and a compiled loop form;
these tests feed both the same inputs and demand agreement to floating-point
tolerance.  When the suite itself runs with the compiled flavour disabled
there is nothing to compare against, so the tests skip.
"""

import numpy as np
import pytest

from synchrony import _kernels

pytestmark = pytest.mark.skipif(
    not _kernels.NUMBA_ACTIVE, reason="compiled kernel flavour disabled")


def _net(rng, sizes=(3, 16, 8, 11)):
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        ws.append(rng.standard_normal((fan_in, fan_out)) * 0.3)
        bs.append(rng.standard_normal(fan_out) * 0.1)
    return ws, bs


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(42)


def test_kuramoto_rhs_parity(rng):
    theta = rng.uniform(-np.pi, np.pi, 7)
    omega = rng.uniform(3, 5, 7)
    adj = (rng.random((7, 7)) < 0.5).astype(np.float64)
    adj = np.triu(adj, 1) + np.triu(adj, 1).T
    a = _kernels.NUMPY_IMPLS["kuramoto_rhs"](theta, omega, 1.25, adj)
    b = _kernels.JIT_IMPLS["kuramoto_rhs"](theta, omega, 1.25, adj)
    assert b == pytest.approx(a, abs=1e-12)


def test_euler_rollout_parity(rng):
    theta0 = rng.uniform(-np.pi, np.pi, 6)
    table = rng.uniform(3, 5, (200, 6))
    adj = np.ones((6, 6)) - np.eye(6)
    a = _kernels.NUMPY_IMPLS["euler_rollout"](theta0, table, 1.0, adj, 0.01)
    b = _kernels.JIT_IMPLS["euler_rollout"](theta0, table, 1.0, adj, 0.01)
    assert b == pytest.approx(a, abs=1e-9)


def test_q_forward_parity(rng):
    (w1, w2, w3), (b1, b2, b3) = _net(rng)
    x = rng.standard_normal(3)
    a = _kernels.NUMPY_IMPLS["q_forward"](w1, b1, w2, b2, w3, b3, x)
    b = _kernels.JIT_IMPLS["q_forward"](w1, b1, w2, b2, w3, b3, x)
    assert b == pytest.approx(a, abs=1e-12)


def test_q_batch_forward_parity(rng):
    (w1, w2, w3), (b1, b2, b3) = _net(rng)
    xs = rng.standard_normal((32, 3))
    a = _kernels.NUMPY_IMPLS["q_batch_forward"](w1, b1, w2, b2, w3, b3, xs)
    b = _kernels.JIT_IMPLS["q_batch_forward"](w1, b1, w2, b2, w3, b3, xs)
    assert b == pytest.approx(a, abs=1e-12)


def test_q_batch_grads_parity(rng):
    (w1, w2, w3), (b1, b2, b3) = _net(rng)
    xs = rng.standard_normal((32, 3))
    actions = rng.integers(0, 11, 32)
    targets = rng.standard_normal(32)
    a = _kernels.NUMPY_IMPLS["q_batch_grads"](w1, b1, w2, b2, w3, b3, xs, actions, targets)
    b = _kernels.JIT_IMPLS["q_batch_grads"](w1, b1, w2, b2, w3, b3, xs, actions, targets)
    assert b[0] == pytest.approx(a[0], abs=1e-12)
    for ga, gb in zip(a[1:], b[1:]):
        assert gb == pytest.approx(ga, abs=1e-12)


def test_group_phasor_parity(rng):
    theta = rng.uniform(-np.pi, np.pi, 9)
    a = _kernels.NUMPY_IMPLS["group_phasor"](0.7, theta)
    b = _kernels.JIT_IMPLS["group_phasor"](0.7, theta)
    assert b == pytest.approx(a, abs=1e-12)


def test_rollout_ca_parity(rng):
    (w1, w2, w3), (b1, b2, b3) = _net(rng, sizes=(3, 128, 64, 11))
    n = 4
    theta0 = rng.uniform(-np.pi, np.pi, n)
    table = rng.uniform(3, 5, (300, n - 1))
    adj = np.ones((n, n)) - np.eye(n)
    parts = np.arange(n - 1, dtype=np.int64)
    args = (theta0, table, 1.25, adj, 0.01, n - 1, parts,
            w1, b1, w2, b2, w3, b3, 4.0, 2.0, 6.0)
    pa, oa, aa = _kernels.NUMPY_IMPLS["rollout_ca"](*args)
    pb, ob, ab = _kernels.JIT_IMPLS["rollout_ca"](*args)
    assert np.array_equal(aa, ab)  # same greedy action sequence
    assert pb == pytest.approx(pa, abs=1e-9)
    assert ob == pytest.approx(oa, abs=1e-9)


def test_rollout_na_parity(rng):
    n = 5
    theta0 = rng.uniform(-np.pi, np.pi, n)
    table = rng.uniform(3, 5, (300, n - 1))
    adj = np.ones((n, n)) - np.eye(n)
    parts = np.arange(n - 1, dtype=np.int64)
    args = (theta0, table, 1.0, adj, 0.01, n - 1, parts, parts, 0.15)
    pa, oa = _kernels.NUMPY_IMPLS["rollout_na"](*args)
    pb, ob = _kernels.JIT_IMPLS["rollout_na"](*args)
    assert pb == pytest.approx(pa, abs=1e-9)
    assert ob == pytest.approx(oa, abs=1e-9)


def test_backend_label_matches_dispatch():
    assert _kernels.BACKEND == "numba"
    assert _kernels.euler_rollout is _kernels.JIT_IMPLS["euler_rollout"]
