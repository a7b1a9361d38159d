import json
import textwrap

import numpy as np
import pytest

import fbf.operators
from fbf.cli import cmd_check, cmd_solve, cmd_sweep, main
from fbf.config import ConfigError, build_from_config, load_config, validate_config
from fbf.diagnostics import (
    envelope_verdict,
    exponential_envelope,
    fejer_monitor,
    residual_integral_monitor,
)
from fbf.dynamics import integrate, schedule_catalog
from fbf.exports import read_trajectory_csv, write_trajectory_csv
from fbf import problems

ROTATION_TOML = """
mode = "{mode}"
seed = 7
output_dir = "{outdir}"
x0 = [1.0, 0.0]

[problem]
name = "skew_rotation"
[problem.params]
dim = 2

[schedule]
name = "constant"
value = {gamma}

[integrator]
method = "rk4"
h = 0.01
horizon = {horizon}
sample_every = 0.1

[discrete]
max_iter = 50
tol = 1e-9
"""


def write_rotation_config(tmp_path, mode="both", gamma=0.5, horizon=5.0, name="run.toml"):
    cfg = tmp_path / name
    cfg.write_text(
        ROTATION_TOML.format(mode=mode, outdir=(tmp_path / "out").as_posix(), gamma=gamma, horizon=horizon)
    )
    return cfg


# --- config validation -------------------------------------------------------------

def test_load_config_roundtrip(tmp_path):
    cfg = load_config(write_rotation_config(tmp_path))
    assert cfg.problem_name == "skew_rotation"
    assert cfg.mode == "both"
    assert cfg.h == 0.01
    problem, schedule = build_from_config(cfg)
    assert problem.dim == 2
    assert schedule(3.0) == 0.5


def test_schedule_out_of_range_names_schedule(tmp_path):
    cfg = load_config(write_rotation_config(tmp_path, gamma=1.0))
    with pytest.raises(ConfigError, match="^schedule"):
        build_from_config(cfg)


def test_validation_errors_name_the_offending_key():
    with pytest.raises(ConfigError, match="^problem"):
        validate_config({"mode": "continuous"})
    with pytest.raises(ConfigError, match="^mode"):
        validate_config({"problem": {"name": "lasso"}, "mode": "sideways"})
    with pytest.raises(ConfigError, match="integrator.h"):
        validate_config({"problem": {"name": "lasso"}, "integrator": {"h": -1}})
    with pytest.raises(ConfigError, match="^monitors"):
        validate_config({"problem": {"name": "lasso"}, "monitors": ["nope"]})
    with pytest.raises(ConfigError, match="^x0"):
        validate_config({"problem": {"name": "lasso"}, "x0": [1.0, "a"]})
    with pytest.raises(ConfigError, match="problem.name"):
        validate_config({"problem": {"name": "mystery"}})


def test_missing_config_file_is_an_error(tmp_path):
    assert cmd_solve(tmp_path / "absent.toml") == 1


# --- solve --------------------------------------------------------------------------

def test_solve_writes_artifacts_and_exits_zero(tmp_path):
    cfg_path = write_rotation_config(tmp_path, horizon=10.0)
    assert cmd_solve(cfg_path, strict=True) == 0
    out = tmp_path / "out"
    assert (out / "trajectory.csv").exists()
    assert (out / "iterates.csv").exists()
    assert (out / "summary.json").exists()
    rows = (out / "trajectory.csv").read_text().strip().splitlines()
    assert rows[0] == "t,residual,dist_to_solution,objective_at_z,gamma"
    assert len(rows) == 102  # header + samples every 0.1 over [0, 10]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["coincidence"]["holds"]
    monitors = summary["continuous"]["monitors"]
    assert monitors["fejer"]["holds"]
    assert monitors["residual_integral"]["holds"]


def test_solve_emits_envelope_csv_for_strongly_monotone_runs(tmp_path):
    cfg = tmp_path / "quad.toml"
    cfg.write_text(
        textwrap.dedent(
            f"""
            mode = "continuous"
            seed = 3
            output_dir = "{(tmp_path / 'qout').as_posix()}"
            x0 = [0.9, -0.7]

            [problem]
            name = "strongly_monotone_quadratic"

            [schedule]
            name = "constant"
            value = 0.5

            [integrator]
            h = 0.01
            horizon = 5.0
            sample_every = 0.1
            """
        )
    )
    assert cmd_solve(cfg, strict=True) == 0
    out = tmp_path / "qout"
    assert (out / "envelope.csv").exists()
    header = (out / "envelope.csv").read_text().splitlines()[0]
    assert header == "t,measured,envelope"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["continuous"]["monitors"]["envelope"]["holds"]
    assert summary["continuous"]["monitors"]["ergodic_objective"]["holds"]


def test_solve_is_byte_deterministic(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    cfg_a = write_rotation_config(tmp_path / "a", name="a.toml")
    cfg_b = write_rotation_config(tmp_path / "b", name="b.toml")
    assert cmd_solve(cfg_a) == 0
    assert cmd_solve(cfg_b) == 0
    for fname in ("trajectory.csv", "iterates.csv", "summary.json"):
        a = (tmp_path / "a" / "out" / fname).read_bytes()
        b = (tmp_path / "b" / "out" / fname).read_bytes()
        assert a == b, fname


def test_strict_mode_flags_monitor_violation(tmp_path, monkeypatch):
    # a wrong shrinkage drives the scheme to a spurious point; the ergodic
    # objective bound must catch it and --strict must surface exit code 2
    cfg = tmp_path / "bad.toml"
    cfg.write_text(
        textwrap.dedent(
            f"""
            mode = "continuous"
            seed = 1
            output_dir = "{(tmp_path / 'bout').as_posix()}"
            x0 = [0.0, 0.0]
            monitors = ["ergodic_objective"]

            [problem]
            name = "lasso"

            [schedule]
            name = "constant"
            value = 0.5

            [integrator]
            h = 0.01
            horizon = 50.0
            sample_every = 0.5
            """
        )
    )
    broken = lambda x, t: np.sign(x) * np.maximum(np.abs(x) - 0.5 * t, 0.0)
    monkeypatch.setattr(fbf.operators, "soft_threshold", broken)
    assert cmd_solve(cfg, strict=True) == 2
    assert cmd_solve(cfg, strict=False) == 0


# --- csv round trip -----------------------------------------------------------------

def test_trajectory_csv_roundtrip_reproduces_verdicts(tmp_path):
    problem = problems.build("strongly_monotone_quadratic")
    sched = schedule_catalog("constant", beta=1.0, value=0.5)
    rec = integrate(problem, sched, np.array([0.9, -0.7]), horizon=5.0, h=0.01, sample_every=0.01)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(path, rec)
    back = read_trajectory_csv(path, beta=problem.beta)

    direct = [
        fejer_monitor(rec, problem.known_solution),
        residual_integral_monitor(rec, sched),
        envelope_verdict(exponential_envelope(rec, sched, problem.rho, problem.known_solution)),
    ]
    replayed = [
        fejer_monitor(back, problem.known_solution),
        residual_integral_monitor(back, sched),
        envelope_verdict(exponential_envelope(back, sched, problem.rho, problem.known_solution)),
    ]
    for a, b in zip(direct, replayed):
        assert a.holds == b.holds
        assert a.applicable == b.applicable
        assert a.worst_margin == pytest.approx(b.worst_margin, rel=1e-12, abs=1e-15)


# --- check --------------------------------------------------------------------------

def test_check_operators_suite_passes(capsys):
    assert cmd_check("operators", seed=42) == 0
    out = capsys.readouterr().out
    assert "operators" in out and "failures" in out


def test_check_rejects_unknown_suite():
    assert cmd_check("everything", seed=1) == 1


def test_check_all_fails_when_soft_threshold_is_broken(monkeypatch):
    broken = lambda x, t: np.sign(x) * np.maximum(np.abs(x) - 0.5 * t, 0.0)
    monkeypatch.setattr(fbf.operators, "soft_threshold", broken)
    assert cmd_check("all", seed=42) != 0


# --- sweep --------------------------------------------------------------------------

def test_sweep_over_gamma_orders_decay(tmp_path):
    cfg_path = write_rotation_config(tmp_path, mode="continuous", horizon=10.0)
    values = [0.1, 0.3, 0.5, 0.7, 0.9]
    assert cmd_sweep(cfg_path, "schedule.value", values) == 0
    agg = (tmp_path / "out" / "aggregate.csv").read_text().strip().splitlines()
    assert agg[0] == "value,final_residual,time_to_tol"
    residuals = [float(line.split(",")[1]) for line in agg[1:]]
    assert residuals == sorted(residuals, reverse=True)  # larger gamma decays faster
    for value in values:
        assert (tmp_path / "out" / f"schedule_value={value:g}" / "summary.json").exists()


def test_sweep_rejects_empty_values(tmp_path):
    cfg_path = write_rotation_config(tmp_path, mode="continuous")
    assert cmd_sweep(cfg_path, "schedule.value", []) == 1


def test_sweep_propagates_entry_errors(tmp_path):
    cfg_path = write_rotation_config(tmp_path, mode="continuous")
    assert cmd_sweep(cfg_path, "schedule.value", [0.5, 1.5]) == 1


def test_main_dispatches(tmp_path, capsys):
    cfg_path = write_rotation_config(tmp_path, mode="continuous")
    assert main(["solve", str(cfg_path)]) == 0
    assert main(["check", "operators", "--seed", "1"]) == 0
    assert main(["sweep", str(cfg_path), "--param", "integrator.h", "--values", "0.1,0.05"]) == 0
    assert main(["sweep", str(cfg_path), "--param", "integrator.h", "--values", "zebra"]) == 1
