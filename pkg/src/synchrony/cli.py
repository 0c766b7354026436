"""Command-line entry point: train, simulate, study, verify-theorem, serve.

All stochastic commands accept --seed and are fully reproducible: the same
invocation writes byte-identical files.  Configs are JSON; every subcommand
accepts --emit-default-config to print a starting point.  SYNCHRONY_LOG
controls the log level (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dqn, experiments, metrics, model, theory
from .agents import CaController, FixedController, NaController

log = logging.getLogger("synchrony")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUNTIME = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _setup_logging() -> None:
    level = os.environ.get("SYNCHRONY_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path, default: dict) -> dict:
    if path is None:
        # deep copy: subcommands edit nested scenario dicts in place
        return copy.deepcopy(default)
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise CliError(f"config not found: {path}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {path}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}", EXIT_IO) from exc
    return out


def _emit(default: dict) -> int:
    print(json.dumps(default, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

TRAIN_DEFAULT = {
    "episodes": 500,
    "seed": 0,
    "env": {
        "n_participants": 2,
        "coupling": 1.25,
        "dt": 0.01,
        "omega_low": 3.4,
        "omega_high": 4.6,
        "episode_steps": 500,
    },
    "hyper": {},
    "eval_episodes": 20,
}


def cmd_train(args) -> int:
    if args.emit_default_config:
        return _emit(TRAIN_DEFAULT)
    cfg = _load_config(args.config, TRAIN_DEFAULT)
    episodes = args.episodes if args.episodes is not None else int(cfg.get("episodes", 500))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = _out_dir(args)

    try:
        env = dqn.KuramotoTrainingEnv(**cfg.get("env", {}))
        hyper = dqn.DqnHyper(**cfg.get("hyper", {}))
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad training config: {exc}") from exc

    start_episode = 0
    initial = None
    if args.checkpoint:
        initial, hyper, meta = dqn.load_checkpoint(args.checkpoint)
        start_episode = int(meta.get("episodes", 0))
        log.info("resuming from %s at episode %d", args.checkpoint, start_episode)
    # shift the seed on resume so continued episodes see fresh draws
    params, tlog = dqn.train(env, hyper, episodes, seed + start_episode,
                             initial_params=initial)

    ck_path = out / "checkpoint.json"
    dqn.save_checkpoint(ck_path, params, hyper, seed, start_episode + episodes)
    curve_path = out / "training_curve.csv"
    with open(curve_path, "w") as fh:
        fh.write("episode,return,buffer_size,loss\n")
        for i, (r, b, l) in enumerate(zip(tlog["episode_returns"],
                                          tlog["buffer_sizes"], tlog["losses"])):
            fh.write(f"{start_episode + i},{r!r},{b},{l!r}\n")

    # quick greedy evaluation on held-out episodes
    eval_rng = np.random.default_rng(np.random.SeedSequence((seed, 0x6576616c)))
    ctrl = CaController(params)
    scores = []
    for _ in range(int(cfg.get("eval_episodes", 20))):
        obs = env.reset(eval_rng)
        ctrl.reset()
        total, done = 0.0, False
        while not done:
            q = dqn.forward(params, obs)
            obs, reward, done = env.step(int(np.argmax(q)))
            total += reward
        scores.append(total / env.episode_steps)
    print(f"checkpoint: {ck_path}")
    print(f"training curve: {curve_path}")
    print(f"eval mean r_tot^2 per step over {len(scores)} greedy episodes: "
          f"{float(np.mean(scores)):.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIMULATE_DEFAULT = {
    "scenario": {
        "graph": {"kind": "ring", "n": 5},
        "coupling": 1.25,
        "frequencies": {"kind": "uniform-once", "mean": 4.0, "spread": 0.6},
        "avatar": {"kind": "none"},
        "theta0": 1.5707963267948966,
        "duration": 30.0,
        "dt": 0.01,
        "reps": 1,
        "seed": 0,
    },
    "rho_window": 5.0,
}


def cmd_simulate(args) -> int:
    if args.emit_default_config:
        return _emit(SIMULATE_DEFAULT)
    cfg = _load_config(args.config, SIMULATE_DEFAULT)
    out = _out_dir(args)
    scn_cfg = cfg.get("scenario", {})
    if args.seed is not None:
        scn_cfg["seed"] = args.seed
    if args.condition is not None:
        try:
            scn_cfg["avatar"] = experiments.condition_avatar(args.condition, args.checkpoint)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    if args.checkpoint is not None:
        scn_cfg.setdefault("avatar", {"kind": "ca"})["checkpoint"] = args.checkpoint
    try:
        scn = experiments.Scenario.from_dict(scn_cfg)
        setup = experiments.resolve_setup(scn)
    except (KeyError, ValueError) as exc:
        raise CliError(f"bad scenario config: {exc}") from exc

    ca_params = None
    if scn.avatar.get("kind") == "ca":
        ck = scn.avatar.get("checkpoint")
        if not ck:
            raise CliError("condition CA needs --checkpoint or avatar.checkpoint")
        try:
            ca_params, _, _ = dqn.load_checkpoint(ck)
        except FileNotFoundError as exc:
            raise CliError(f"checkpoint not found: {ck}", EXIT_IO) from exc

    window = float(cfg.get("rho_window", 5.0))
    run = experiments.run_once(scn, setup, (scn.seed, 0), ca_params, keep_traces=True)
    phases = run["phases"]

    # reconstruct the full frequency rows for the trajectory file
    n_steps = phases.shape[0] - 1
    freqs = np.zeros((n_steps + 1, setup.graph.n))
    rng = np.random.default_rng(np.random.SeedSequence((scn.seed, 0)))
    fproc = model.FrequencyProcess(
        kind=scn.frequencies["kind"], mean=setup.means,
        spread=None if scn.frequencies["kind"] == "constant" else setup.spreads)
    freqs[:-1, setup.participants] = fproc.draw_table(n_steps, rng)
    if run["omega_a_trace"] is not None:
        freqs[:-1, setup.avatar] = np.asarray(run["omega_a_trace"])[:n_steps]
    freqs[-1] = freqs[-2]

    traj = model.Trajectory(dt=scn.dt, phases=phases, frequencies=freqs,
                            participant_ids=tuple(int(i) for i in setup.participants),
                            avatar_ids=(() if setup.avatar < 0 else (int(setup.avatar),)))
    traj_path = out / "trajectory.csv"
    traj.to_csv(traj_path)
    cfg_hash = __import__("hashlib").sha256(
        json.dumps(scn.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    metrics_path = out / "metrics.csv"
    metrics.write_metrics_csv(metrics_path, phases, scn.dt, setup.participants,
                              window, cfg_hash)
    print(f"trajectory: {traj_path}")
    print(f"metrics: {metrics_path}")
    print(f"<r_net> = {run['r_net']:.6f}")
    print(f"<r_tot> = {run['r_tot']:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------

STUDY_DEFAULT = {
    "kind": "heatmap",
    "checkpoint": None,
    "seed": 0,
    "heatmap": {
        "c_values": [0.4, 0.7, 1.0, 1.3, 1.6],
        "delta_values": [0.2, 0.4, 0.6, 0.8, 1.0],
        "n_participants": 5,
        "reps": 3,
        "duration": 40.0,
    },
    "bell": {
        "omega_grid": [3.0, 3.2, 3.4, 3.6, 3.8, 4.0, 4.2, 4.4, 4.6, 4.8, 5.0],
        "n_participants": 7,
        "coupling": 0.6,
        "reps": 3,
        "duration": 60.0,
    },
    "degree": {
        "d_values": [1, 2, 3, 4, 5],
        "n_participants": 5,
        "coupling": 1.25,
        "reps": 3,
        "duration": 40.0,
        # resync task: participants splayed over the circle, avatar at 0
        "theta0": [-3.141592653589793, -1.8849555921538759, -0.6283185307179586,
                   0.6283185307179586, 1.8849555921538759, 0.0],
    },
    "improvement": {
        "n_participants": 5,
        "coupling": 0.5,
        "reps": 3,
        "duration": 60.0,
    },
}


def cmd_study(args) -> int:
    if args.emit_default_config:
        return _emit(STUDY_DEFAULT)
    cfg = _load_config(args.config, STUDY_DEFAULT)
    kind = cfg.get("kind", "heatmap")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = _out_dir(args)
    ck = args.checkpoint or cfg.get("checkpoint")
    ca_params = None
    if ck:
        try:
            ca_params, _, _ = dqn.load_checkpoint(ck)
        except FileNotFoundError as exc:
            raise CliError(f"checkpoint not found: {ck}", EXIT_IO) from exc

    if kind == "heatmap":
        p = cfg.get("heatmap", STUDY_DEFAULT["heatmap"])
        cs, ds = p["c_values"], p["delta_values"]
        common = dict(n_participants=int(p.get("n_participants", 5)),
                      reps=int(p.get("reps", 3)),
                      duration=float(p.get("duration", 40.0)), seed=seed)
        without = experiments.run_heatmap(cs, ds, with_avatar=False, **common)
        experiments.write_matrix_csv(out / "heatmap_without.csv", without, cs, ds)
        experiments.write_matrix_dat(out / "heatmap_without.dat", without, cs, ds)
        payload = {"without_region": experiments.heatmap_region_count(without)}
        if ca_params is not None:
            with_av = experiments.run_heatmap(cs, ds, with_avatar=True,
                                              ca_params=ca_params, **common)
            experiments.write_matrix_csv(out / "heatmap_with.csv", with_av, cs, ds)
            experiments.write_matrix_dat(out / "heatmap_with.dat", with_av, cs, ds)
            payload["with_region"] = experiments.heatmap_region_count(with_av)
        experiments.write_json(out / "heatmap_summary.json", payload)
        print(f"heatmap outputs in {out}: region counts {payload}")
        return EXIT_OK

    if kind == "bell":
        if ca_params is None:
            raise CliError("bell study needs --checkpoint")
        p = cfg.get("bell", STUDY_DEFAULT["bell"])
        res = experiments.run_bell_curve(
            ca_params, omega_grid=p.get("omega_grid"),
            n_participants=int(p.get("n_participants", 7)),
            coupling=float(p.get("coupling", 1.25)),
            reps=int(p.get("reps", 3)), duration=float(p.get("duration", 60.0)),
            seed=seed)
        with open(out / "bell_curve.csv", "w") as fh:
            fh.write("omega,mean,std\n")
            for row in res["curve"]:
                fh.write(f"{row['omega']!r},{row['mean']!r},{row['std']!r}\n")
            fh.write(f"ca,{res['ca_mean']!r},{res['ca_std']!r}\n")
        experiments.write_json(out / "bell_summary.json",
                               {k: v for k, v in res.items() if k != "omega_a_trace"})
        np.savetxt(out / "omega_a_trace.dat", np.asarray(res["omega_a_trace"]))
        print(f"bell outputs in {out}: ca_mean={res['ca_mean']:.4f} "
              f"ca_omega_mean={res['ca_omega_mean']:.3f}")
        return EXIT_OK

    if kind == "degree":
        if ca_params is None:
            raise CliError("degree study needs --checkpoint")
        p = cfg.get("degree", STUDY_DEFAULT["degree"])
        res = experiments.run_degree_study(
            ca_params, d_values=[int(d) for d in p.get("d_values", [1, 2, 3, 4, 5])],
            n_participants=int(p.get("n_participants", 5)),
            coupling=float(p.get("coupling", 1.25)),
            reps=int(p.get("reps", 3)), duration=float(p.get("duration", 40.0)),
            seed=seed, theta0=p.get("theta0", STUDY_DEFAULT["degree"]["theta0"]))
        with open(out / "degree_study.csv", "w") as fh:
            fh.write("d,arrangements,ca_mean,na_mean,p_value,delta_lambda2\n")
            for d, row in sorted(res.items()):
                fh.write(f"{d},{row['arrangements']},{row['ca_mean']!r},"
                         f"{row['na_mean']!r},{row['p_value']!r},"
                         f"{row['delta_lambda2']!r}\n")
        experiments.write_json(out / "degree_summary.json", res)
        print(f"degree outputs in {out}")
        return EXIT_OK

    if kind == "improvement":
        if ca_params is None:
            raise CliError("improvement study needs --checkpoint")
        p = cfg.get("improvement", STUDY_DEFAULT["improvement"])
        res = experiments.improvement_report(
            ca_params, n_participants=int(p.get("n_participants", 5)),
            coupling=float(p.get("coupling", 0.5)),
            reps=int(p.get("reps", 3)), duration=float(p.get("duration", 60.0)),
            seed=seed)
        with open(out / "improvement.csv", "w") as fh:
            fh.write("metric,without,with,pct_increase\n")
            for k, row in res.items():
                pct = "" if row["pct_increase"] is None else repr(row["pct_increase"])
                fh.write(f"{k},{row['without']!r},{row['with']!r},{pct}\n")
        experiments.write_json(out / "improvement.json", res)
        print(f"improvement outputs in {out}")
        return EXIT_OK

    raise CliError(f"unknown study kind {kind!r}")


# ---------------------------------------------------------------------------
# verify-theorem
# ---------------------------------------------------------------------------


def cmd_verify_theorem(args) -> int:
    if args.emit_default_config:
        return _emit({"omega_1": 4.3, "omega_2": 3.7, "coupling": 1.25,
                      "grid_start": 3.0, "grid_stop": 5.0, "grid_step": 0.05})
    cfg = _load_config(args.config, {})
    w1 = float(cfg.get("omega_1", 4.3))
    w2 = float(cfg.get("omega_2", 3.7))
    c = float(cfg.get("coupling", 1.25))
    grid = np.arange(float(cfg.get("grid_start", 3.0)),
                     float(cfg.get("grid_stop", 5.0)) + 1e-9,
                     float(cfg.get("grid_step", 0.05)))
    out = _out_dir(args)
    report = theory.verify_theorem1(w1, w2, c, grid)
    chi, nu = theory.chi_nu()
    report["chi"] = chi
    report["nu"] = nu
    theory.write_theorem_report(report, csv_path=out / "theorem_grid.csv",
                                json_path=out / "theorem_summary.json")
    print(f"chi={chi!r} nu={nu!r}")
    if report["argmax_omega_a"] is None:
        print("no locked grid point (hypothesis violated for every omega_a)")
    else:
        print(f"argmax omega_a = {report['argmax_omega_a']!r} "
              f"(expected {report['expected_optimum']!r}), "
              f"max r_net = {report['max_r_net']:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    if args.emit_default_config:
        from . import service
        return _emit(service.SERVE_DEFAULT)
    from . import service
    cfg = _load_config(args.config, service.SERVE_DEFAULT)
    if args.condition is not None:
        cfg["condition"] = args.condition
    if args.checkpoint is not None:
        cfg["checkpoint"] = args.checkpoint
    if args.seed is not None:
        cfg["seed"] = args.seed
    return service.serve(cfg)


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synchrony",
        description="Group-synchronization simulator, RL avatar trainer, and live session service.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--emit-default-config", action="store_true",
                       help="print the default config JSON and exit")

    p = sub.add_parser("train", help="train the avatar policy")
    common(p)
    p.add_argument("--episodes", type=int, help="override episode count")
    p.add_argument("--checkpoint", help="resume from an existing checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="run one scenario, write trajectory + metrics")
    common(p)
    p.add_argument("--condition", help="P | CA | NA | CA-RC | CA-RF")
    p.add_argument("--checkpoint", help="trained checkpoint for CA conditions")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="run a batch study (heatmap|bell|degree|improvement)")
    common(p)
    p.add_argument("--checkpoint", help="trained checkpoint")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify-theorem", help="three-node lock analysis and optimality sweep")
    common(p)
    p.set_defaults(func=cmd_verify_theorem)

    p = sub.add_parser("serve", help="run the live session server")
    common(p)
    p.add_argument("--condition", help="Solo | P | CA | NA | CA-RC | CA-RF")
    p.add_argument("--checkpoint", help="trained checkpoint for CA conditions")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, KeyError) as exc:
        print(f"error[{EXIT_CONFIG}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error[{EXIT_IO}]: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
