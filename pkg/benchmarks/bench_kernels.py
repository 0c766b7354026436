"""Timing comparison of the jit-compiled kernels against the numpy fallbacks.

Run as a script:

    python benchmarks/bench_kernels.py [--repeat N]

The active backend is chosen at import time via SYNCHRONY_NO_NUMBA, so this
script times both flavors explicitly through the kernel registry instead of
re-importing the package.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from synchrony import _kernels
from synchrony.dqn import LAYER_SIZES, DqnHyper, init_mlp
from synchrony.graphs import attach_avatar, make_ring_graph


def _time(fn, args, repeat: int, number: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def build_cases(rng: np.random.Generator) -> list:
    n, steps = 6, 2000
    graph = attach_avatar(make_ring_graph(n - 1), list(range(n - 1)))
    adj = graph.adjacency
    theta0 = rng.uniform(-np.pi, np.pi, n)
    table = rng.normal(4.0, 0.3, (steps, n - 1))
    participants = np.arange(n - 1, dtype=np.int64)

    params = init_mlp(rng, LAYER_SIZES)
    w = params.w1, params.b1, params.w2, params.b2, params.w3, params.b3
    hyper = DqnHyper()
    xs = rng.normal(0.0, 1.0, (hyper.batch_size, LAYER_SIZES[0]))
    actions = rng.integers(0, LAYER_SIZES[-1], hyper.batch_size)
    targets = rng.normal(0.0, 1.0, hyper.batch_size)

    return [
        ("euler_rollout", (theta0[:-1], table[:, : n - 1], 1.25,
                           make_ring_graph(n - 1).adjacency, 0.01), 20),
        ("q_forward", (*w, xs[0]), 2000),
        ("q_batch_forward", (*w, xs), 500),
        ("q_batch_grads", (*w, xs, actions, targets), 500),
        ("rollout_ca", (theta0, table, 1.25, adj, 0.01, n - 1, participants,
                        *w, 4.0, 2.0, 6.0), 5),
        ("rollout_na", (theta0, table, 1.25, adj, 0.01, n - 1, participants,
                        participants, float(np.exp(-0.6 * np.pi))), 20),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    print(f"{'kernel':<18} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, call_args, number in cases:
        np_fn = _kernels.NUMPY_IMPLS[name]
        t_np = _time(np_fn, call_args, args.repeat, number)
        row = f"{name:<18} {t_np * 1e6:>10.1f}us"
        if _kernels.JIT_IMPLS:
            jit_fn = _kernels.JIT_IMPLS[name]
            jit_fn(*call_args)  # compile outside the timed region
            t_jit = _time(jit_fn, call_args, args.repeat, number)
            row += f" {t_jit * 1e6:>10.1f}us {t_np / t_jit:>8.1f}x"
        else:
            row += f" {'(disabled)':>12} {'-':>9}"
        print(row)
    print(f"\nactive backend: {_kernels.BACKEND}")


if __name__ == "__main__":
    main()
