"""Batch studies over the oscillator group: coupling/heterogeneity sweeps,
fixed-frequency comparison curves, avatar-degree analysis, and paired
with/without-avatar improvement reports.

Every study is driven by integer seeds expanded through SeedSequence with the
cell/arrangement/repetition coordinates mixed into the entropy, so arms that
must be compared (with vs without avatar, RL vs baseline) replay identical
participant frequency draws, and rerunning any study reproduces its output
bit for bit.

Group parameter defaults are editable placeholders: per-node Gaussian means
spread around 4.15 rad/s with std 0.3, coupling 1.25.  They stand in for
motion-capture-fitted values that are not part of this repository.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, metrics
from .dqn import MlpParams
from .graphs import GraphSpec, attach_avatar, make_complete_graph, make_ring_graph
from .model import FrequencyProcess
from .stats import TTestResult, one_tailed_t_test

RHO_WINDOW = 5.0


def placeholder_group(n_participants: int) -> tuple:
    """Per-node (means, stds): documented placeholder heterogeneous group."""
    means = 4.15 + 0.8 * np.linspace(-0.5, 0.5, n_participants)
    stds = np.full(n_participants, 0.3)
    return means, stds


# ---------------------------------------------------------------------------
# scenario resolution and the single-run fast path
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """One study arm: base group, avatar placement, horizon, repetitions."""

    graph_kind: str
    n_participants: int
    coupling: float
    frequencies: dict
    avatar: dict = field(default_factory=lambda: {"kind": "none"})
    theta0: object = math.pi / 2
    duration: float = 100.0
    dt: float = 0.01
    reps: int = 5
    seed: int = 0

    def base_graph(self) -> GraphSpec:
        if self.graph_kind == "ring":
            return make_ring_graph(self.n_participants)
        if self.graph_kind == "complete":
            return make_complete_graph(self.n_participants)
        raise ValueError(f"unknown graph kind {self.graph_kind!r}")

    def to_dict(self) -> dict:
        return {
            "graph": {"kind": self.graph_kind, "n": self.n_participants},
            "coupling": self.coupling,
            "frequencies": self.frequencies,
            "avatar": self.avatar,
            "theta0": self.theta0,
            "duration": self.duration,
            "dt": self.dt,
            "reps": self.reps,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        g = d["graph"]
        return cls(
            graph_kind=g["kind"],
            n_participants=int(g["n"]),
            coupling=float(d["coupling"]),
            frequencies=d["frequencies"],
            avatar=d.get("avatar", {"kind": "none"}),
            theta0=d.get("theta0", math.pi / 2),
            duration=float(d.get("duration", 100.0)),
            dt=float(d.get("dt", 0.01)),
            reps=int(d.get("reps", 5)),
            seed=int(d.get("seed", 0)),
        )


CONDITIONS = {
    "P": {"kind": "none"},
    "CA": {"kind": "ca", "neighbors": "all"},
    "NA": {"kind": "na", "neighbors": "all"},
    "CA-RC": {"kind": "ca", "replace": "closest"},
    "CA-RF": {"kind": "ca", "replace": "farthest"},
}


def condition_avatar(name: str, checkpoint: str = None) -> dict:
    """Avatar block for a named experimental condition."""
    if name not in CONDITIONS:
        raise ValueError(f"unknown condition {name!r}; choose from {sorted(CONDITIONS)}")
    cfg = dict(CONDITIONS[name])
    if cfg["kind"] == "ca" and checkpoint is not None:
        cfg["checkpoint"] = checkpoint
    return cfg


@dataclass(frozen=True)
class ResolvedSetup:
    graph: GraphSpec
    participants: np.ndarray
    avatar: int
    means: np.ndarray
    spreads: np.ndarray
    neighbors: np.ndarray


def resolve_setup(scn: Scenario) -> ResolvedSetup:
    """Apply the avatar placement rule to the base group.

    Attach adds node n_p wired to the requested neighbours; replace turns the
    participant whose mean frequency is closest/farthest to the group mean
    into the avatar (ties to the lowest index) without rewiring anything.
    """
    base = scn.base_graph()
    fp = scn.frequencies
    means = np.broadcast_to(np.asarray(fp["mean"], dtype=np.float64),
                            (scn.n_participants,)).copy()
    spread_val = fp.get("spread", 0.0)
    spreads = np.broadcast_to(np.asarray(spread_val, dtype=np.float64),
                              (scn.n_participants,)).copy()

    kind = scn.avatar.get("kind", "none")
    if kind == "none":
        return ResolvedSetup(base, np.arange(base.n, dtype=np.int64), -1,
                             means, spreads, np.empty(0, dtype=np.int64))

    replace = scn.avatar.get("replace")
    if replace is not None:
        dist = np.abs(means - means.mean())
        node = int(np.argmin(dist) if replace == "closest" else np.argmax(dist))
        parts = np.array([i for i in range(base.n) if i != node], dtype=np.int64)
        nbrs = np.array([i for i in parts if base.adjacency[node, i] != 0.0],
                        dtype=np.int64)
        return ResolvedSetup(base, parts, node, means[parts], spreads[parts], nbrs)

    nbr_cfg = scn.avatar.get("neighbors", "all")
    nbrs = (list(range(scn.n_participants)) if nbr_cfg == "all"
            else [int(i) for i in nbr_cfg])
    graph = attach_avatar(base, nbrs)
    parts = np.arange(scn.n_participants, dtype=np.int64)
    return ResolvedSetup(graph, parts, scn.n_participants, means, spreads,
                         np.asarray(sorted(nbrs), dtype=np.int64))


def _theta0_vector(scn: Scenario, n: int) -> np.ndarray:
    if np.isscalar(scn.theta0):
        return np.full(n, float(scn.theta0))
    v = np.asarray(scn.theta0, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"theta0 must be scalar or length {n}")
    return v


def run_once(scn: Scenario, setup: ResolvedSetup, rep_seed,
             ca_params: MlpParams = None, keep_traces: bool = False) -> dict:
    """One seeded run of a resolved scenario; returns the four time-averaged
    metrics plus avatar info.  rep_seed may be any SeedSequence entropy."""
    rng = np.random.default_rng(np.random.SeedSequence(rep_seed))
    n_steps = int(round(scn.duration / scn.dt))
    fproc = FrequencyProcess(kind=scn.frequencies["kind"], mean=setup.means,
                             spread=None if scn.frequencies["kind"] == "constant"
                             else setup.spreads)
    table = fproc.draw_table(n_steps, rng)
    theta0 = _theta0_vector(scn, setup.graph.n)
    adj = setup.graph.adjacency

    kind = scn.avatar.get("kind", "none")
    omega_a_trace = None
    if kind == "none":
        phases = _kernels.euler_rollout(theta0, table, scn.coupling, adj, scn.dt)
    elif kind == "fixed":
        full = np.empty((n_steps, setup.graph.n))
        full[:, setup.participants] = table
        full[:, setup.avatar] = float(scn.avatar["omega"])
        phases = _kernels.euler_rollout(theta0, full, scn.coupling, adj, scn.dt)
        omega_a_trace = full[:, setup.avatar]
    elif kind == "ca":
        if ca_params is None:
            raise ValueError("CA scenario needs trained network parameters")
        phases, omega_a_trace, _ = _kernels.rollout_ca(
            theta0, table, scn.coupling, adj, scn.dt, setup.avatar,
            setup.participants, *ca_params.arrays(),
            float(scn.avatar.get("omega_a0", 4.0)),
            float(scn.avatar.get("omega_min", 2.0)),
            float(scn.avatar.get("omega_max", 6.0)),
        )
    elif kind == "na":
        if setup.neighbors.shape[0] == 0:
            raise ValueError("NA needs at least one participant neighbour")
        pole = math.exp(-2.0 * math.pi * float(scn.avatar.get("pole_hz", 30.0)) * scn.dt)
        phases, omega_a_trace = _kernels.rollout_na(
            theta0, table, scn.coupling, adj, scn.dt, setup.avatar,
            setup.participants, setup.neighbors, pole)
    else:
        raise ValueError(f"unknown avatar kind {kind!r}")

    out = {
        "r_net": metrics.mean_coherence(phases, scn.dt, setup.participants),
        "r_tot": metrics.mean_coherence(phases, scn.dt),
        "rho_net": metrics.mean_group_sync(phases, scn.dt, setup.participants, RHO_WINDOW),
        "rho_tot": metrics.mean_group_sync(phases, scn.dt, None, RHO_WINDOW),
        "omega_a_mean": (None if omega_a_trace is None
                         else float(np.mean(omega_a_trace))),
    }
    if keep_traces:
        out["phases"] = phases
        out["omega_a_trace"] = omega_a_trace
    return out


def run_scenario(scn: Scenario, ca_params: MlpParams = None) -> dict:
    """All repetitions of one scenario plus mean/std aggregates."""
    setup = resolve_setup(scn)
    runs = [run_once(scn, setup, (scn.seed, rep), ca_params)
            for rep in range(scn.reps)]
    summary = {}
    for key in ("r_net", "r_tot", "rho_net", "rho_tot"):
        vals = np.array([r[key] for r in runs])
        summary[key] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=0))}
    return {"scenario": scn.to_dict(), "runs": runs, "summary": summary}


# ---------------------------------------------------------------------------
# coupling/heterogeneity sweep
# ---------------------------------------------------------------------------


def run_heatmap(
    c_values,
    delta_values,
    with_avatar: bool,
    ca_params: MlpParams = None,
    n_participants: int = 5,
    reps: int = 15,
    duration: float = 100.0,
    dt: float = 0.01,
    seed: int = 0,
) -> np.ndarray:
    """Matrix of mean time-averaged participant coherence over (c, delta).

    Each cell averages `reps` runs of a ring group with frequencies drawn
    once per run from U[4-delta, 4+delta] and every phase starting at pi/2;
    with_avatar adds the RL avatar wired to everyone.  Cell seeds mix in the
    grid coordinates but not the avatar flag, so both maps see identical
    participant draws.
    """
    if with_avatar and ca_params is None:
        raise ValueError("heatmap with avatar needs trained network parameters")
    avatar = {"kind": "ca", "neighbors": "all"} if with_avatar else {"kind": "none"}
    out = np.empty((len(c_values), len(delta_values)))
    for i, c in enumerate(c_values):
        for j, delta in enumerate(delta_values):
            scn = Scenario(
                graph_kind="ring", n_participants=n_participants,
                coupling=float(c),
                frequencies={"kind": "uniform-once", "mean": 4.0, "spread": float(delta)},
                avatar=avatar, duration=duration, dt=dt, reps=reps, seed=seed,
            )
            setup = resolve_setup(scn)
            vals = [run_once(scn, setup, (seed, i, j, rep), ca_params)["r_net"]
                    for rep in range(reps)]
            out[i, j] = float(np.mean(vals))
    return out


def heatmap_region_count(matrix: np.ndarray, threshold: float = 0.9) -> int:
    return int(np.sum(matrix >= threshold))


# ---------------------------------------------------------------------------
# fixed-frequency comparison curve
# ---------------------------------------------------------------------------


def run_bell_curve(
    ca_params: MlpParams,
    omega_grid=None,
    n_participants: int = 7,
    means=None,
    stds=None,
    coupling: float = 1.25,
    reps: int = 5,
    duration: float = 300.0,
    dt: float = 0.01,
    seed: int = 0,
) -> dict:
    """Sweep fixed avatar frequencies against the adaptive avatar.

    Returns the per-omega mean/std of time-averaged participant coherence,
    the RL avatar's band, its mean commanded frequency, and the first
    repetition's frequency trace.
    """
    if omega_grid is None:
        omega_grid = np.linspace(3.0, 5.0, 11)
    default_means, default_stds = placeholder_group(n_participants)
    if means is None:
        means = default_means
    if stds is None:
        stds = default_stds
    freq = {"kind": "gaussian-per-step", "mean": np.asarray(means).tolist(),
            "spread": np.asarray(stds).tolist()}

    def arm(avatar, keep=False):
        scn = Scenario(graph_kind="ring", n_participants=n_participants,
                       coupling=coupling, frequencies=freq, avatar=avatar,
                       duration=duration, dt=dt, reps=reps, seed=seed)
        setup = resolve_setup(scn)
        return [run_once(scn, setup, (seed, rep), ca_params, keep_traces=keep and rep == 0)
                for rep in range(reps)]

    curve = []
    for w in np.asarray(omega_grid, dtype=np.float64):
        runs = arm({"kind": "fixed", "neighbors": "all", "omega": float(w)})
        vals = np.array([r["r_net"] for r in runs])
        curve.append({"omega": float(w), "mean": float(vals.mean()),
                      "std": float(vals.std(ddof=0))})

    ca_runs = arm({"kind": "ca", "neighbors": "all"}, keep=True)
    ca_vals = np.array([r["r_net"] for r in ca_runs])
    return {
        "curve": curve,
        "ca_mean": float(ca_vals.mean()),
        "ca_std": float(ca_vals.std(ddof=0)),
        "ca_omega_mean": float(np.mean([r["omega_a_mean"] for r in ca_runs])),
        "omega_a_trace": ca_runs[0]["omega_a_trace"],
        "group_mean_frequency": float(np.mean(means)),
    }


# ---------------------------------------------------------------------------
# avatar degree study
# ---------------------------------------------------------------------------


def run_degree_study(
    ca_params: MlpParams,
    d_values=(1, 2, 3, 4, 5),
    n_participants: int = 5,
    means=None,
    stds=None,
    coupling: float = 1.25,
    reps: int = 5,
    duration: float = 100.0,
    dt: float = 0.01,
    seed: int = 0,
    theta0: object = math.pi / 2,
) -> dict:
    """Compare RL and low-pass avatars across every wiring of d_a edges.

    For each degree d, enumerates all C(n_p, d) neighbour sets; each
    (arrangement, repetition) pair replays the same participant draws for
    both agent kinds.  Reports the coherence samples, a one-tailed Welch
    test of RL > baseline, and the mean change in algebraic connectivity
    from adding the avatar.
    """
    default_means, default_stds = placeholder_group(n_participants)
    if means is None:
        means = default_means
    if stds is None:
        stds = default_stds
    freq = {"kind": "gaussian-per-step", "mean": np.asarray(means).tolist(),
            "spread": np.asarray(stds).tolist()}
    base = make_ring_graph(n_participants)
    lambda_base = metrics.algebraic_connectivity(base)

    results = {}
    for d in d_values:
        if not 1 <= d <= n_participants:
            raise ValueError(f"avatar degree {d} out of range 1..{n_participants}")
        arrangements = list(itertools.combinations(range(n_participants), d))
        samples = {"ca": [], "na": []}
        delta_l2 = []
        for a_idx, nbrs in enumerate(arrangements):
            delta_l2.append(
                metrics.algebraic_connectivity(attach_avatar(base, list(nbrs)))
                - lambda_base)
            for kind in ("ca", "na"):
                scn = Scenario(graph_kind="ring", n_participants=n_participants,
                               coupling=coupling, frequencies=freq,
                               avatar={"kind": kind, "neighbors": list(nbrs)},
                               theta0=theta0, duration=duration, dt=dt,
                               reps=reps, seed=seed)
                setup = resolve_setup(scn)
                for rep in range(reps):
                    samples[kind].append(
                        run_once(scn, setup, (seed, d, a_idx, rep), ca_params)["r_net"])
        if len(samples["ca"]) >= 2:
            test = one_tailed_t_test(samples["ca"], samples["na"])
        else:
            # single run per arm: no variance estimate, flag instead of crash
            test = TTestResult(math.nan, math.nan, math.nan, True)
        results[int(d)] = {
            "arrangements": len(arrangements),
            "ca": samples["ca"],
            "na": samples["na"],
            "ca_mean": float(np.mean(samples["ca"])),
            "na_mean": float(np.mean(samples["na"])),
            "p_value": test.p_value,
            "degenerate_test": test.degenerate,
            "delta_lambda2": float(np.mean(delta_l2)),
        }
    return results


# ---------------------------------------------------------------------------
# paired improvement report
# ---------------------------------------------------------------------------


def improvement_report(
    ca_params: MlpParams,
    n_participants: int = 5,
    means=None,
    stds=None,
    coupling: float = 1.25,
    avatar: dict = None,
    reps: int = 5,
    duration: float = 300.0,
    dt: float = 0.01,
    seed: int = 0,
) -> dict:
    """Percentage change of the four time-averaged metrics from adding the
    avatar, with both arms replaying identical participant draws.

    Near-zero baselines (< 1e-9) make the percentage meaningless; those rows
    carry pct = None and a flag instead of a division.
    """
    default_means, default_stds = placeholder_group(n_participants)
    if means is None:
        means = default_means
    if stds is None:
        stds = default_stds
    freq = {"kind": "gaussian-per-step", "mean": np.asarray(means).tolist(),
            "spread": np.asarray(stds).tolist()}
    avatar = avatar or {"kind": "ca", "neighbors": "all"}

    def arm(av):
        scn = Scenario(graph_kind="ring", n_participants=n_participants,
                       coupling=coupling, frequencies=freq, avatar=av,
                       duration=duration, dt=dt, reps=reps, seed=seed)
        setup = resolve_setup(scn)
        runs = [run_once(scn, setup, (seed, rep), ca_params) for rep in range(reps)]
        return {k: float(np.mean([r[k] for r in runs]))
                for k in ("r_net", "r_tot", "rho_net", "rho_tot")}

    without = arm({"kind": "none"})
    with_av = arm(avatar)
    report = {}
    for key in ("r_net", "r_tot", "rho_net", "rho_tot"):
        base_v = without[key]
        row = {"without": base_v, "with": with_av[key]}
        if abs(base_v) < 1e-9:
            row["pct_increase"] = None
            row["zero_baseline"] = True
        else:
            row["pct_increase"] = 100.0 * (with_av[key] - base_v) / base_v
            row["zero_baseline"] = False
        report[key] = row
    return report


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


def write_matrix_csv(path, matrix: np.ndarray, row_values, col_values,
                     row_name: str = "c", col_name: str = "delta") -> None:
    with open(path, "w") as fh:
        fh.write(f"{row_name}\\{col_name}," + ",".join(repr(float(v)) for v in col_values) + "\n")
        for rv, row in zip(row_values, matrix):
            fh.write(repr(float(rv)) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def write_matrix_dat(path, matrix: np.ndarray, row_values, col_values) -> None:
    """Gnuplot-ready long format: one `x y z` line per cell, blank line per row."""
    with open(path, "w") as fh:
        fh.write("# x y z\n")
        for rv, row in zip(row_values, matrix):
            for cv, x in zip(col_values, row):
                fh.write(f"{float(rv)!r} {float(cv)!r} {float(x)!r}\n")
            fh.write("\n")


def write_json(path, payload) -> None:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not JSON-serializable: {type(o)}")

    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
