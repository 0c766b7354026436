"""Closed-form analysis of the three-node group: two participants plus one
avatar on a complete graph with uniform coupling c.

Working variables are the phase differences theta = theta_1 - theta_2 and
eps = theta_a - theta_m, where theta_m is the circular mean of the two
participant phases.  A locked configuration satisfies

    F1: 2 sin(theta) + 2 sin(theta/2) cos(eps)                      = (w1 - w2)/c
    F2: sin(theta) + sin(theta/2) cos(eps) - 3 sin(eps) cos(theta/2) = (w1 - wa)/c

(both re-derived from the pairwise difference dynamics; see the module tests
for the independent check against direct simulation).  With eps = 0 both
collapse to sin(theta) + sin(theta/2) = (w1 - w2)/(2c) when wa is the
participant mean, which is solvable iff the right side stays below
nu = sin(chi) + sin(chi/2), the maximum of the left side, attained at
chi = 2 acos((-1 + sqrt(33))/8).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

NEWTON_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def chi_nu() -> tuple:
    """(chi, nu): the half-angle-balance root and the lock-existence bound."""
    chi = 2.0 * math.acos((-1.0 + math.sqrt(33.0)) / 8.0)
    nu = math.sin(chi) + math.sin(chi / 2.0)
    return chi, nu


def _wrap(x: float) -> float:
    return math.pi - (math.pi - x) % (2.0 * math.pi)


def lock_residuals(theta: float, eps: float, w1: float, w2: float, wa: float, c: float):
    f1 = 2.0 * math.sin(theta) + 2.0 * math.sin(theta / 2.0) * math.cos(eps) - (w1 - w2) / c
    f2 = (math.sin(theta) + math.sin(theta / 2.0) * math.cos(eps)
          - 3.0 * math.sin(eps) * math.cos(theta / 2.0) - (w1 - wa) / c)
    return f1, f2


def _lock_jacobian(theta: float, eps: float):
    th2 = theta / 2.0
    return np.array([
        [2.0 * math.cos(theta) + math.cos(th2) * math.cos(eps),
         -2.0 * math.sin(th2) * math.sin(eps)],
        [math.cos(theta) + 0.5 * math.cos(th2) * math.cos(eps)
         + 1.5 * math.sin(eps) * math.sin(th2),
         -math.sin(th2) * math.sin(eps) - 3.0 * math.cos(eps) * math.cos(th2)],
    ])


def jacobian_eigs(theta_12: float, theta_1a: float, c: float = 1.0) -> np.ndarray:
    """Eigenvalues of the difference-dynamics Jacobian at a configuration.

    Negative pair means the lock is locally asymptotically stable.  On the
    half-angle line theta_1a = theta_12/2 the matrix is triangular with
    eigenvalues -c(2 cos theta + cos(theta/2)) and -3c cos(theta/2).
    """
    x, y = theta_12, theta_1a
    j = c * np.array([
        [-2.0 * math.cos(x) - math.cos(x - y), -math.cos(y) + math.cos(x - y)],
        [-math.cos(x) + math.cos(y - x), -2.0 * math.cos(y) - math.cos(y - x)],
    ])
    return np.sort(np.linalg.eigvals(j).real)


@dataclass(frozen=True)
class PhaseLockSolution:
    theta_12: float
    epsilon: float
    theta_1a: float
    theta_2a: float
    residuals: tuple
    stable: bool
    r_net: float


def _solution_from_root(theta: float, eps: float, w1, w2, wa, c) -> PhaseLockSolution:
    theta = _wrap(theta)
    eps = _wrap(eps)
    theta_1a = _wrap(theta / 2.0 - eps)
    theta_2a = _wrap(-theta / 2.0 - eps)
    res = lock_residuals(theta, eps, w1, w2, wa, c)
    eigs = jacobian_eigs(theta, theta_1a, c)
    return PhaseLockSolution(
        theta_12=theta,
        epsilon=eps,
        theta_1a=theta_1a,
        theta_2a=theta_2a,
        residuals=res,
        stable=bool(eigs[1] < 0.0),
        r_net=abs(math.cos(theta / 2.0)),
    )


def solve_phase_lock(w1: float, w2: float, wa: float, c: float, grid: int = 64) -> list:
    """All locked configurations of the three-node system, stable ones first.

    Seeds a grid x grid lattice over the torus and polishes every seed with
    a step-clipped Newton iteration run vectorized across the whole lattice;
    roots are deduplicated by wrapped distance and must have residual norm
    below 1e-10.  The redundancy of the lattice covers every basin, so no
    line search is needed.
    """
    if c <= 0:
        raise ValueError("coupling must be positive")
    axis = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    th, ep = [a.ravel() for a in np.meshgrid(axis, axis)]
    rhs1 = (w1 - w2) / c
    rhs2 = (w1 - wa) / c
    for _ in range(80):
        s_th, c_th = np.sin(th), np.cos(th)
        s_h, c_h = np.sin(th / 2.0), np.cos(th / 2.0)
        s_e, c_e = np.sin(ep), np.cos(ep)
        f1 = 2.0 * s_th + 2.0 * s_h * c_e - rhs1
        f2 = s_th + s_h * c_e - 3.0 * s_e * c_h - rhs2
        if max(np.abs(f1).max(), np.abs(f2).max()) < NEWTON_TOL:
            break
        a11 = 2.0 * c_th + c_h * c_e
        a12 = -2.0 * s_h * s_e
        a21 = c_th + 0.5 * c_h * c_e + 1.5 * s_e * s_h
        a22 = -s_h * s_e - 3.0 * c_e * c_h
        det = a11 * a22 - a12 * a21
        safe = np.abs(det) > 1e-14
        inv_det = np.where(safe, det, 1.0)
        d_th = np.where(safe, (a22 * f1 - a12 * f2) / inv_det, 0.0)
        d_ep = np.where(safe, (a11 * f2 - a21 * f1) / inv_det, 0.0)
        np.clip(d_th, -1.0, 1.0, out=d_th)
        np.clip(d_ep, -1.0, 1.0, out=d_ep)
        th -= d_th
        ep -= d_ep
    th = np.pi - np.mod(np.pi - th, 2.0 * np.pi)
    ep = np.pi - np.mod(np.pi - ep, 2.0 * np.pi)
    f1, f2 = lock_residuals_arrays(th, ep, w1, w2, wa, c)
    ok = np.maximum(np.abs(f1), np.abs(f2)) < RESIDUAL_TOL
    roots = []
    for t, e in zip(th[ok], ep[ok]):
        if any(abs(_wrap(t - r[0])) < 1e-6 and abs(_wrap(e - r[1])) < 1e-6
               for r in roots):
            continue
        roots.append((float(t), float(e)))
    sols = [_solution_from_root(t, e, w1, w2, wa, c) for t, e in roots]
    return sorted(sols, key=lambda s: (not s.stable, abs(s.theta_12)))


def lock_residuals_arrays(th, ep, w1, w2, wa, c):
    f1 = 2.0 * np.sin(th) + 2.0 * np.sin(th / 2.0) * np.cos(ep) - (w1 - w2) / c
    f2 = (np.sin(th) + np.sin(th / 2.0) * np.cos(ep)
          - 3.0 * np.sin(ep) * np.cos(th / 2.0) - (w1 - wa) / c)
    return f1, f2


def smallest_lock_angle(delta_omega: float, c: float, eps: float = 0.0):
    """Smallest-|theta| root of F1 at fixed eps, or None when out of range.

    Used to confirm numerically that eps = 0 minimizes |theta| (the argument
    the original analysis made graphically).
    """
    rhs = delta_omega / c
    ce = math.cos(eps)

    def g(th):
        return 2.0 * math.sin(th) + 2.0 * ce * math.sin(th / 2.0)

    def gp(th):
        return 2.0 * math.cos(th) + ce * math.cos(th / 2.0)

    # g rises from 0 to its first maximum; locate that turning point
    lo, hi = 0.0, math.pi
    if gp(hi) > 0:
        peak = hi
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if gp(mid) > 0:
                lo = mid
            else:
                hi = mid
        peak = 0.5 * (lo + hi)
    if abs(rhs) > g(peak):
        return None
    lo, hi = 0.0, peak
    target = abs(rhs)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return math.copysign(root, rhs)


# ---------------------------------------------------------------------------
# brute-force optimality check
# ---------------------------------------------------------------------------


def _lock_metrics(w1, w2, wa, c, theta0, dt=0.01, duration=30.0,
                  vel_tol=1e-4, hold=1.0):
    """Simulate the three-node system; returns (locked, theta_12, r_net).

    Locked means the largest pairwise velocity difference stayed below
    vel_tol for the final `hold` seconds.  r_net is the participants' pair
    coherence |cos(theta_12 / 2)| measured from the final sample.
    """
    n_steps = int(round(duration / dt))
    omega = np.array([w1, w2, wa])
    table = np.tile(omega, (n_steps, 1))
    adj = np.ones((3, 3)) - np.eye(3)
    phases = _kernels.euler_rollout(np.asarray(theta0, dtype=np.float64),
                                    table, c, adj, dt)
    hold_steps = int(round(hold / dt))
    tail = phases[-hold_steps:]
    locked = True
    for row in tail[:: max(hold_steps // 20, 1)]:
        rhs = _kernels.kuramoto_rhs(row, omega, c, adj)
        if np.ptp(rhs) >= vel_tol:
            locked = False
            break
    theta_12 = _wrap(float(phases[-1, 0] - phases[-1, 1]))
    r_net = abs(math.cos(theta_12 / 2.0))
    return locked, theta_12, r_net


def verify_theorem1(w1: float, w2: float, c: float, omega_a_grid=None) -> dict:
    """Sweep fixed avatar frequencies and locate the r_net-optimal one.

    Each grid point simulates from a configuration near the solver's best
    root (falling back to a small spread when no root exists) and records
    whether the system locked and at what participant coherence.  The
    theorem says the winner sits at the participants' mean frequency.
    """
    if omega_a_grid is None:
        omega_a_grid = np.arange(3.0, 5.0 + 1e-9, 0.05)
    entries = []
    for wa in np.asarray(omega_a_grid, dtype=np.float64):
        sols = solve_phase_lock(w1, w2, float(wa), c)
        if sols:
            best = sols[0]
            theta0 = [best.theta_1a, best.theta_1a - best.theta_12, 0.0]
        else:
            theta0 = [0.1, -0.1, 0.0]
        locked, theta_12, r_net = _lock_metrics(w1, w2, float(wa), c, theta0)
        entries.append({
            "omega_a": float(wa),
            "locked": locked,
            "theta_12": theta_12 if locked else float("nan"),
            "r_net": r_net if locked else float("nan"),
        })
    locked_entries = [e for e in entries if e["locked"]]
    best = max(locked_entries, key=lambda e: e["r_net"]) if locked_entries else None
    return {
        "omega_1": w1,
        "omega_2": w2,
        "coupling": c,
        "expected_optimum": (w1 + w2) / 2.0,
        "argmax_omega_a": None if best is None else best["omega_a"],
        "max_r_net": None if best is None else best["r_net"],
        "entries": entries,
    }


def write_theorem_report(report: dict, csv_path=None, json_path=None) -> None:
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("omega_a,locked,theta_12,r_net\n")
            for e in report["entries"]:
                fh.write(f"{e['omega_a']!r},{int(e['locked'])},"
                         f"{e['theta_12']!r},{e['r_net']!r}\n")
    if json_path is not None:
        summary = {k: v for k, v in report.items() if k != "entries"}
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
