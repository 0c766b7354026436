"""Command-line behaviour: subcommands, exit codes, emitted files.

Everything goes through cli.main(argv) in-process, so these tests also
guard against cross-invocation state leaks in the default configs.
"""

import json
import time

import pytest

from synchrony import __version__, cli, dqn


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    """A barely-trained checkpoint: enough for plumbing, cheap to make."""
    path = tmp_path_factory.mktemp("cli_ck") / "checkpoint.json"
    env = dqn.KuramotoTrainingEnv(episode_steps=60)
    params, _ = dqn.train(env, dqn.DqnHyper(), episodes=2, seed=5)
    dqn.save_checkpoint(path, params, dqn.DqnHyper(), 5, 2)
    return str(path)


def _scenario_config(tmp_path, duration=6.0, seed=0):
    cfg = {
        "scenario": {
            "graph": {"kind": "ring", "n": 5},
            "coupling": 1.25,
            "frequencies": {"kind": "uniform-once", "mean": 4.0, "spread": 0.6},
            "avatar": {"kind": "none"},
            "theta0": 1.5707963267948966,
            "duration": duration,
            "dt": 0.01,
            "reps": 1,
            "seed": seed,
        },
        "rho_window": 5.0,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg))
    return path


# ---------------------------------------------------------------------------
# parser-level behaviour
# ---------------------------------------------------------------------------


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


@pytest.mark.parametrize("command",
                         ["train", "simulate", "study", "verify-theorem", "serve"])
def test_emit_default_config_prints_json(command, capsys):
    rc = cli.main([command, "--emit-default-config"])
    assert rc == cli.EXIT_OK
    parsed = json.loads(capsys.readouterr().out)
    assert isinstance(parsed, dict) and parsed


def test_config_file_not_found_is_io_error(capsys):
    rc = cli.main(["simulate", "--config", "/no/such/config.json"])
    assert rc == cli.EXIT_IO
    assert "error[3]" in capsys.readouterr().err


def test_invalid_json_config_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = cli.main(["simulate", "--config", str(bad)])
    assert rc == cli.EXIT_CONFIG
    assert "error[2]" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def test_train_five_episode_smoke_under_ten_seconds(tmp_path, capsys):
    start = time.monotonic()
    rc = cli.main(["train", "--episodes", "5", "--seed", "3",
                   "--out", str(tmp_path)])
    elapsed = time.monotonic() - start
    assert rc == cli.EXIT_OK
    assert elapsed < 10.0
    assert (tmp_path / "checkpoint.json").exists()
    curve = (tmp_path / "training_curve.csv").read_text().splitlines()
    assert curve[0] == "episode,return,buffer_size,loss"
    assert len(curve) == 6
    assert curve[1].startswith("0,")
    out = capsys.readouterr().out
    assert "checkpoint:" in out and "eval mean" in out


def test_train_resume_continues_episode_count(tmp_path):
    cfg = {"episodes": 3, "seed": 7,
           "env": {"episode_steps": 60}, "eval_episodes": 2}
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps(cfg))
    first = tmp_path / "first"
    rc = cli.main(["train", "--config", str(cfg_path), "--out", str(first)])
    assert rc == cli.EXIT_OK
    _, _, meta = dqn.load_checkpoint(first / "checkpoint.json")
    assert meta["episodes"] == 3

    resumed = tmp_path / "resumed"
    rc = cli.main(["train", "--config", str(cfg_path), "--episodes", "2",
                   "--out", str(resumed),
                   "--checkpoint", str(first / "checkpoint.json")])
    assert rc == cli.EXIT_OK
    _, _, meta = dqn.load_checkpoint(resumed / "checkpoint.json")
    assert meta["episodes"] == 5
    curve = (resumed / "training_curve.csv").read_text().splitlines()
    # curve numbering picks up where the first run stopped
    assert curve[1].startswith("3,")
    assert curve[-1].startswith("4,")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _metrics_rows(path):
    lines = path.read_text().splitlines()
    header = lines[1].split(",")
    return header, [line.split(",") for line in lines[2:]]


def test_simulate_condition_p_r_net_equals_r_tot(tmp_path, capsys):
    cfg = _scenario_config(tmp_path)
    out = tmp_path / "p_run"
    rc = cli.main(["simulate", "--config", str(cfg), "--condition", "P",
                   "--out", str(out)])
    assert rc == cli.EXIT_OK
    header, rows = _metrics_rows(out / "metrics.csv")
    r_tot, r_net = header.index("r_tot"), header.index("r_net")
    rho_tot, rho_net = header.index("rho_tot"), header.index("rho_net")
    for row in rows:
        assert row[r_tot] == row[r_net]
        assert row[rho_tot] == row[rho_net]
    assert "<r_net> =" in capsys.readouterr().out


def test_simulate_ca_trajectory_carries_avatar_column(tmp_path, tiny_checkpoint):
    cfg = _scenario_config(tmp_path)
    p_out = tmp_path / "p"
    ca_out = tmp_path / "ca"
    assert cli.main(["simulate", "--config", str(cfg), "--condition", "P",
                     "--out", str(p_out)]) == cli.EXIT_OK
    assert cli.main(["simulate", "--config", str(cfg), "--condition", "CA",
                     "--checkpoint", tiny_checkpoint,
                     "--out", str(ca_out)]) == cli.EXIT_OK
    p_header = (p_out / "trajectory.csv").read_text().splitlines()[0]
    ca_header = (ca_out / "trajectory.csv").read_text().splitlines()[0]
    # the avatar joins five participants as node 5
    assert "theta_5" not in p_header
    assert "theta_5" in ca_header and "omega_5" in ca_header
    # with the avatar excluded from the net set the two columns diverge
    header, rows = _metrics_rows(ca_out / "metrics.csv")
    r_tot, r_net = header.index("r_tot"), header.index("r_net")
    assert any(row[r_tot] != row[r_net] for row in rows)


def test_simulate_unknown_condition_is_config_error(tmp_path, capsys):
    cfg = _scenario_config(tmp_path)
    rc = cli.main(["simulate", "--config", str(cfg), "--condition", "XX",
                   "--out", str(tmp_path / "x")])
    assert rc == cli.EXIT_CONFIG
    assert "error[2]" in capsys.readouterr().err


def test_simulate_ca_without_checkpoint_is_config_error(tmp_path):
    cfg = _scenario_config(tmp_path)
    rc = cli.main(["simulate", "--config", str(cfg), "--condition", "CA",
                   "--out", str(tmp_path / "x")])
    assert rc == cli.EXIT_CONFIG


def test_simulate_missing_checkpoint_file_is_io_error(tmp_path):
    cfg = _scenario_config(tmp_path)
    rc = cli.main(["simulate", "--config", str(cfg), "--condition", "CA",
                   "--checkpoint", str(tmp_path / "absent.json"),
                   "--out", str(tmp_path / "x")])
    assert rc == cli.EXIT_IO


def test_simulate_same_seed_writes_identical_bytes(tmp_path):
    cfg = _scenario_config(tmp_path, duration=6.0, seed=9)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out_b)]) == 0
    for name in ("trajectory.csv", "metrics.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------


def test_study_heatmap_smoke_writes_four_cells(tmp_path, capsys):
    cfg = {"kind": "heatmap",
           "heatmap": {"c_values": [0.8, 1.6], "delta_values": [0.3, 0.6],
                       "n_participants": 3, "reps": 1, "duration": 6.0}}
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    lines = (tmp_path / "heatmap_without.csv").read_text().splitlines()
    assert lines[0] == "c\\delta,0.3,0.6"
    assert len(lines) == 3
    assert all(len(line.split(",")) == 3 for line in lines[1:])
    summary = json.loads((tmp_path / "heatmap_summary.json").read_text())
    assert isinstance(summary["without_region"], int)
    assert "with_region" not in summary  # no checkpoint given
    capsys.readouterr()


def test_study_heatmap_with_checkpoint_adds_avatar_grid(tmp_path, tiny_checkpoint):
    cfg = {"kind": "heatmap",
           "heatmap": {"c_values": [0.8, 1.6], "delta_values": [0.3, 0.6],
                       "n_participants": 3, "reps": 1, "duration": 6.0}}
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path),
                   "--checkpoint", tiny_checkpoint])
    assert rc == cli.EXIT_OK
    assert (tmp_path / "heatmap_with.csv").exists()
    summary = json.loads((tmp_path / "heatmap_summary.json").read_text())
    assert set(summary) == {"without_region", "with_region"}


def test_study_bell_three_grid_points(tmp_path, tiny_checkpoint):
    cfg = {"kind": "bell",
           "bell": {"omega_grid": [3.6, 4.0, 4.4], "n_participants": 3,
                    "coupling": 0.6, "reps": 1, "duration": 6.0}}
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path),
                   "--checkpoint", tiny_checkpoint])
    assert rc == cli.EXIT_OK
    lines = (tmp_path / "bell_curve.csv").read_text().splitlines()
    assert lines[0] == "omega,mean,std"
    assert len(lines) == 5  # three fixed-frequency rows plus the CA band row
    assert [line.split(",")[0] for line in lines[1:4]] == ["3.6", "4.0", "4.4"]
    assert lines[4].startswith("ca,")
    summary = json.loads((tmp_path / "bell_summary.json").read_text())
    assert {"ca_mean", "ca_std", "ca_omega_mean"} <= set(summary)
    assert (tmp_path / "omega_a_trace.dat").exists()


def test_study_degree_ring4_enumerates_ten_arrangements(tmp_path, tiny_checkpoint):
    cfg = {"kind": "degree",
           "degree": {"d_values": [1, 2], "n_participants": 4, "coupling": 1.0,
                      "reps": 1, "duration": 6.0,
                      "theta0": 1.5707963267948966}}
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path),
                   "--checkpoint", tiny_checkpoint])
    assert rc == cli.EXIT_OK
    lines = (tmp_path / "degree_study.csv").read_text().splitlines()
    assert lines[0].startswith("d,arrangements,")
    table = {int(line.split(",")[0]): int(line.split(",")[1]) for line in lines[1:]}
    assert table == {1: 4, 2: 6}
    summary = json.loads((tmp_path / "degree_summary.json").read_text())
    assert len(summary["1"]["ca"]) == 4
    assert len(summary["2"]["ca"]) == 6
    assert len(summary["1"]["ca"]) + len(summary["2"]["ca"]) == 10


def test_study_unknown_kind_is_config_error(tmp_path, capsys):
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps({"kind": "zigzag"}))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG
    assert "unknown study kind" in capsys.readouterr().err


def test_study_bell_without_checkpoint_is_config_error(tmp_path):
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps({"kind": "bell"}))
    rc = cli.main(["study", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG


# ---------------------------------------------------------------------------
# verify-theorem
# ---------------------------------------------------------------------------


def test_verify_theorem_default_finds_midpoint(tmp_path, capsys):
    rc = cli.main(["verify-theorem", "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    summary = json.loads((tmp_path / "theorem_summary.json").read_text())
    assert summary["chi"] == pytest.approx(1.871858911322652, abs=1e-12)
    assert summary["nu"] == pytest.approx(1.760172593046087, abs=1e-12)
    assert summary["argmax_omega_a"] == pytest.approx(4.0, abs=0.05)
    grid = (tmp_path / "theorem_grid.csv").read_text().splitlines()
    assert grid[0] == "omega_a,locked,theta_12,r_net"
    assert len(grid) == 42  # [3, 5] in steps of 0.05
    assert "argmax omega_a" in capsys.readouterr().out


def test_verify_theorem_reports_no_lock_rows_when_hypothesis_fails(tmp_path, capsys):
    cfg = {"omega_1": 9.0, "omega_2": 1.0, "coupling": 0.5,
           "grid_start": 4.6, "grid_stop": 5.4, "grid_step": 0.2}
    cfg_path = tmp_path / "thm.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main(["verify-theorem", "--config", str(cfg_path),
                   "--out", str(tmp_path)])
    assert rc == cli.EXIT_OK
    grid = (tmp_path / "theorem_grid.csv").read_text().splitlines()
    assert len(grid) == 6
    assert all(line.split(",")[1] == "0" for line in grid[1:])
    summary = json.loads((tmp_path / "theorem_summary.json").read_text())
    assert summary["argmax_omega_a"] is None
    assert "no locked grid point" in capsys.readouterr().out
