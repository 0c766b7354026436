import numpy as np
import pytest

from synchrony.graphs import GraphSpec
from synchrony.metrics import (
    algebraic_connectivity,
    circular_variance,
    coherence,
    group_sync_index,
    mean_coherence,
    mean_group_sync,
    metrics_table,
    order_parameter,
    time_average,
    write_metrics_csv,
)
from synchrony.model import wrap_angles


# ---------------------------------------------------------------------------
# instantaneous order parameters
# ---------------------------------------------------------------------------


def test_identical_phases_give_unit_coherence():
    theta = np.full(6, 1.234)
    assert coherence(theta) == pytest.approx(1.0, abs=1e-15)
    assert coherence(theta, subset=[0, 2, 4]) == pytest.approx(1.0, abs=1e-15)


def test_antipodal_pair_cancels():
    assert coherence(np.array([0.0, np.pi])) == pytest.approx(0.0, abs=1e-15)


def test_three_phase_fan():
    # e^0 + e^{i pi/2} + e^{i pi} = i, so r = 1/3
    theta = np.array([0.0, np.pi / 2, np.pi])
    assert coherence(theta) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_order_parameter_shapes_and_empty_subset():
    traj = np.zeros((5, 3))
    q = order_parameter(traj)
    assert q.shape == (5,)
    assert np.isscalar(complex(order_parameter(traj[0])))
    with pytest.raises(ValueError):
        order_parameter(traj, subset=[])


def test_coherence_bounded_for_random_input():
    rng = np.random.default_rng(0)
    r = coherence(rng.uniform(-np.pi, np.pi, (200, 9)))
    assert np.all(r >= 0.0) and np.all(r <= 1.0)


def test_rotational_invariance_of_coherence():
    rng = np.random.default_rng(1)
    theta = rng.uniform(-np.pi, np.pi, (50, 5))
    shifted = wrap_angles(theta + 2.1)
    assert coherence(shifted) == pytest.approx(coherence(theta), abs=1e-12)


# ---------------------------------------------------------------------------
# circular variance
# ---------------------------------------------------------------------------


def test_circular_variance_examples():
    assert circular_variance(np.full(4, 0.7)) == pytest.approx(0.0, abs=1e-15)
    spread = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert circular_variance(spread) == pytest.approx(1.0, abs=1e-15)
    # two phasors half a hexagon apart: 1 - cos(pi/6)
    assert circular_variance(np.array([0.0, np.pi / 3])) == pytest.approx(
        1.0 - np.cos(np.pi / 6), abs=1e-12)
    with pytest.raises(ValueError):
        circular_variance([])


# ---------------------------------------------------------------------------
# time averages
# ---------------------------------------------------------------------------


def test_time_average_constant_and_ramp():
    assert time_average(np.full(101, 3.7), dt=0.01) == pytest.approx(3.7, abs=1e-12)
    t = np.linspace(0.0, 1.0, 101)
    assert time_average(t, dt=0.01) == pytest.approx(0.5, abs=1e-12)  # exact for linear
    assert time_average(t, dt=0.01, t_start=0.5) == pytest.approx(0.75, abs=1e-12)


def test_time_average_window_validation():
    with pytest.raises(ValueError):
        time_average(np.ones(10), dt=0.01, t_start=0.09)  # start at last sample
    with pytest.raises(ValueError):
        time_average(np.ones(1), dt=0.01)


def test_mean_coherence_is_average_of_r():
    rng = np.random.default_rng(2)
    traj = rng.uniform(-np.pi, np.pi, (300, 4))
    direct = time_average(coherence(traj), dt=0.01, t_start=0.5)
    assert mean_coherence(traj, dt=0.01, t_start=0.5) == pytest.approx(direct, abs=0)


# ---------------------------------------------------------------------------
# drift-corrected group synchronization index
# ---------------------------------------------------------------------------


def _rho_direct(theta, dt, subset, window):
    """Straightforward per-sample evaluation of the windowed index."""
    idx = np.asarray(subset, dtype=np.int64)
    w = int(round(window / dt))
    n_samples = theta.shape[0]
    out = np.full(n_samples, np.nan)
    e = np.exp(1j * theta[:, idx])
    psi = np.angle(e.mean(axis=1))
    phi = np.exp(1j * (theta[:, idx] - psi[:, None]))
    for k in range(w, n_samples):
        rel = []
        for col in range(idx.shape[0]):
            seg = phi[k - w:k + 1, col]
            s = np.trapezoid(seg, dx=dt) / (w * dt)
            rel.append(phi[k, col] * np.exp(-1j * np.angle(s)))
        out[k] = abs(np.mean(rel))
    return out


def test_rho_matches_direct_evaluation_for_split_speeds():
    dt = 0.01
    t = np.arange(0, 12.0 + dt / 2, dt)
    theta = wrap_angles(np.stack([4.0 * t, 6.5 * t], axis=1))  # large speed gap
    lib = group_sync_index(theta, dt, window=5.0)
    ref = _rho_direct(theta, dt, [0, 1], 5.0)
    mask = ~np.isnan(ref)
    assert lib[mask] == pytest.approx(ref[mask], abs=1e-10)
    assert np.all(np.isnan(lib[~mask]))


def test_rho_is_one_for_rigid_rotation():
    dt = 0.01
    t = np.arange(0, 8.0 + dt / 2, dt)
    offsets = np.array([0.0, 0.9, -2.2, 1.4])
    theta = wrap_angles(3.3 * t[:, None] + offsets[None, :])
    rho = group_sync_index(theta, dt)
    valid = ~np.isnan(rho)
    assert valid.sum() > 0
    assert rho[valid] == pytest.approx(1.0, abs=1e-12)


def test_rho_rotational_invariance_and_bounds():
    rng = np.random.default_rng(3)
    dt = 0.01
    theta = wrap_angles(np.cumsum(rng.normal(0.04, 0.01, (700, 5)), axis=0))
    rho = group_sync_index(theta, dt)
    shifted = group_sync_index(wrap_angles(theta + 1.7), dt)
    valid = ~np.isnan(rho)
    assert np.all(rho[valid] >= 0.0) and np.all(rho[valid] <= 1.0)
    assert shifted[valid] == pytest.approx(rho[valid], abs=1e-12)


def test_rho_nan_before_one_window():
    theta = np.zeros((300, 2))
    rho = group_sync_index(theta, dt=0.01, window=2.0)
    assert np.all(np.isnan(rho[:200]))
    assert rho[200] == pytest.approx(1.0)


def test_rho_subset_excludes_other_nodes():
    dt = 0.01
    t = np.arange(0, 8.0 + dt / 2, dt)
    # participants rotate rigidly; the last node drifts fast
    theta = wrap_angles(np.stack([4 * t, 4 * t + 1, 9.0 * t], axis=1))
    rho_net = group_sync_index(theta, dt, subset=[0, 1])
    valid = ~np.isnan(rho_net)
    assert rho_net[valid] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        group_sync_index(theta, dt, subset=[])


def test_rho_short_history_all_nan_and_mean_requires_margin():
    theta = np.zeros((100, 2))
    assert np.all(np.isnan(group_sync_index(theta, dt=0.01, window=5.0)))
    with pytest.raises(ValueError):
        mean_group_sync(theta, dt=0.01, window=5.0)


def test_mean_group_sync_of_rigid_rotation():
    dt = 0.01
    t = np.arange(0, 9.0 + dt / 2, dt)
    theta = wrap_angles(np.stack([5 * t, 5 * t + 0.4], axis=1))
    assert mean_group_sync(theta, dt) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# report table / CSV
# ---------------------------------------------------------------------------


def test_metrics_table_columns(tmp_path):
    rng = np.random.default_rng(4)
    theta = wrap_angles(np.cumsum(rng.normal(0.04, 0.005, (800, 3)), axis=0))
    cols = metrics_table(theta, dt=0.01, participant_ids=[0, 1])
    assert list(cols) == ["k", "t", "r_tot", "r_net", "rho_tot", "rho_net"]
    assert cols["r_net"] == pytest.approx(coherence(theta, [0, 1]), abs=0)

    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, theta, 0.01, [0, 1], config_sha256="abc123")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#") and "abc123" in lines[0]
    assert lines[1] == "k,t,r_tot,r_net,rho_tot,rho_net"
    assert len(lines) == 2 + 800
    head = lines[2].split(",")
    assert head[4] == "nan"  # rho undefined before one window
    tail = lines[-1].split(",")
    assert float(tail[2]) == pytest.approx(cols["r_tot"][-1], abs=0)


# ---------------------------------------------------------------------------
# connectivity vs reachability
# ---------------------------------------------------------------------------


def _connected(adj) -> bool:
    n = adj.shape[0]
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                frontier.append(int(j))
    return len(seen) == n


def test_lambda2_positive_iff_connected():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(3, 8))
        upper = np.triu((rng.random((n, n)) < 0.35).astype(float), 1)
        adj = upper + upper.T
        g = GraphSpec(n=n, adjacency=adj)
        lam2 = algebraic_connectivity(g)
        assert lam2 >= -1e-12
        assert (lam2 > 1e-9) == _connected(adj)
