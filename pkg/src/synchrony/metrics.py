"""Synchronization measures over phase trajectories and graph connectivity.

Conventions: a trajectory is a (K+1, n) array of wrapped phases sampled at
t = k*dt.  "tot" variants average over every node, "net" variants over an
explicit subset (normally the participants).  Time averages use trapezoidal
integration.  A phasor whose magnitude falls below 1e-12 has its argument
reported as 0.
"""

from __future__ import annotations

import numpy as np

from .graphs import GraphSpec

PHASOR_EPS = 1e-12


def order_parameter(phases: np.ndarray, subset=None) -> np.ndarray:
    """Complex mean phasor q = <exp(i*theta)> over subset, per sample.

    Accepts a single phase vector or a (K+1, n) trajectory; returns a complex
    scalar or a complex (K+1,) array accordingly.
    """
    theta = np.asarray(phases, dtype=np.float64)
    single = theta.ndim == 1
    theta = np.atleast_2d(theta)
    # fancy indexing returns an F-ordered gather whose strided reduction
    # sums in a different order; force C layout so a subset equal to the
    # whole node set reduces bit-identically to subset=None
    cols = (theta if subset is None
            else np.ascontiguousarray(theta[:, np.asarray(subset, dtype=np.int64)]))
    if cols.shape[1] == 0:
        raise ValueError("order parameter over an empty subset")
    q = np.exp(1j * cols).mean(axis=1)
    return q[0] if single else q


def coherence(phases: np.ndarray, subset=None) -> np.ndarray:
    """r = |q| per sample; in [0, 1], and 1 only at exact phase alignment."""
    return np.abs(order_parameter(phases, subset))


def circular_variance(relative_phases) -> float:
    """1 - |mean phasor| of an angle vector; 0 at identical angles, 1 when
    the phasors cancel."""
    phi = np.asarray(relative_phases, dtype=np.float64)
    if phi.ndim != 1 or phi.shape[0] == 0:
        raise ValueError("circular variance needs a nonempty angle vector")
    return float(1.0 - np.abs(np.exp(1j * phi).mean()))


def time_average(values: np.ndarray, dt: float, t_start: float = 0.0) -> float:
    """Trapezoidal mean of a sampled signal from t_start to the end."""
    v = np.asarray(values, dtype=np.float64)
    k0 = int(round(t_start / dt))
    if not 0 <= k0 < v.shape[0] - 1:
        raise ValueError("t_start leaves fewer than two samples")
    span = (v.shape[0] - 1 - k0) * dt
    return float(np.trapezoid(v[k0:], dx=dt) / span)


def mean_coherence(phases: np.ndarray, dt: float, subset=None, t_start: float = 0.0) -> float:
    """Time-averaged r over [t_start, T]."""
    return time_average(coherence(phases, subset), dt, t_start)


def _safe_angle(z: np.ndarray) -> np.ndarray:
    ang = np.angle(z)
    return np.where(np.abs(z) > PHASOR_EPS, ang, 0.0)


def group_sync_index(
    phases: np.ndarray, dt: float, subset=None, window: float = 5.0
) -> np.ndarray:
    """Drift-corrected group synchronization index rho(t), NaN for t < window.

    Per sample: psi = arg q over the subset; phi_i = theta_i - psi; s_i is the
    trapezoidal mean of exp(i*phi_i) over the trailing `window` seconds;
    rho = |mean_i exp(i*(phi_i - arg s_i))|.  The trailing window makes the
    index insensitive to a common rotating frame and to each node's own slow
    drift, so it isolates relative dispersion.
    """
    theta = np.atleast_2d(np.asarray(phases, dtype=np.float64))
    idx = np.arange(theta.shape[1]) if subset is None else np.asarray(subset, dtype=np.int64)
    if idx.shape[0] == 0:
        raise ValueError("group sync index over an empty subset")
    w = int(round(window / dt))
    n_samples = theta.shape[0]
    rho = np.full(n_samples, np.nan)
    if w < 1 or w >= n_samples:
        return rho

    e_all = np.exp(1j * np.ascontiguousarray(theta[:, idx]))
    psi = _safe_angle(e_all.mean(axis=1))
    e_phi = e_all * np.exp(-1j * psi)[:, None]

    # trailing trapezoidal window via cumulative integrals
    seg = 0.5 * (e_phi[1:] + e_phi[:-1]) * dt
    cum = np.vstack([np.zeros((1, idx.shape[0]), dtype=complex), np.cumsum(seg, axis=0)])
    s = (cum[w:] - cum[:-w]) / (w * dt)

    mean_arg = _safe_angle(s)
    delta = e_phi[w:] * np.exp(-1j * mean_arg)
    rho[w:] = np.abs(delta.mean(axis=1))
    return rho


def mean_group_sync(
    phases: np.ndarray, dt: float, subset=None, window: float = 5.0
) -> float:
    """Time-averaged rho over [window, T]; requires T > window."""
    rho = group_sync_index(phases, dt, subset, window)
    w = int(round(window / dt))
    if w >= rho.shape[0] - 1:
        raise ValueError("trajectory no longer than the averaging window")
    return float(np.trapezoid(rho[w:], dx=dt) / ((rho.shape[0] - 1 - w) * dt))


# ---------------------------------------------------------------------------
# graph connectivity
# ---------------------------------------------------------------------------


def laplacian(graph: GraphSpec) -> np.ndarray:
    a = graph.adjacency
    return np.diag(a.sum(axis=1)) - a


def algebraic_connectivity(graph: GraphSpec) -> float:
    """Second-smallest Laplacian eigenvalue, via a full symmetric eigensolve.

    Positive iff the graph is connected; larger means better-knit.
    """
    vals = np.linalg.eigvalsh(laplacian(graph))
    return float(vals[1])


# ---------------------------------------------------------------------------
# per-run metrics table
# ---------------------------------------------------------------------------


def metrics_table(
    phases: np.ndarray, dt: float, participant_ids, window: float = 5.0
) -> dict:
    """Columns of the standard metrics report for one trajectory."""
    parts = np.asarray(participant_ids, dtype=np.int64)
    n_samples = np.atleast_2d(phases).shape[0]
    return {
        "k": np.arange(n_samples),
        "t": np.arange(n_samples) * dt,
        "r_tot": coherence(phases),
        "r_net": coherence(phases, parts),
        "rho_tot": group_sync_index(phases, dt, None, window),
        "rho_net": group_sync_index(phases, dt, parts, window),
    }


def write_metrics_csv(
    path,
    phases: np.ndarray,
    dt: float,
    participant_ids,
    window: float = 5.0,
    config_sha256: str = "",
) -> None:
    """Metrics CSV: one comment line recording the window and config hash,
    then k,t,r_tot,r_net,rho_tot,rho_net rows.  rho columns are 'nan' until
    one full window has elapsed.
    """
    cols = metrics_table(phases, dt, participant_ids, window)
    names = ["k", "t", "r_tot", "r_net", "rho_tot", "rho_net"]
    with open(path, "w") as fh:
        fh.write(f"# window={window!r},config_sha256={config_sha256}\n")
        fh.write(",".join(names) + "\n")
        for k in range(cols["k"].shape[0]):
            row = [str(cols["k"][k])] + [repr(float(cols[c][k])) for c in names[1:]]
            fh.write(",".join(row) + "\n")
