import json

import pytest

from tworate.cli import main
from tworate.harness import parse_runs_csv, parse_summary_csv, parse_trajectory_csv, spec_to_json
from tworate.controllers import ControllerSpec
from tworate.harness import ExperimentSpec


def write_config(path, **overrides):
    spec = ExperimentSpec(
        ns=(50,),
        lambdas=(4,),
        controllers=(ControllerSpec(kind="two-rate"), ControllerSpec(kind="static")),
        replications=2,
        master_seed=7,
    )
    if overrides:
        import dataclasses

        spec = dataclasses.replace(spec, **overrides)
    path.write_text(spec_to_json(spec))
    return spec


def test_run_prints_record(capsys):
    assert main(["run", "--n", "100", "--lambda", "10", "--controller", "two-rate", "--seed", "1"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["hit_optimum"] is True
    assert record["evaluations"] == record["generations"] * 10
    assert record["controller"] == "two-rate(F=2)"


def test_run_writes_trajectory(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert main(["run", "--n", "60", "--lambda", "6", "--seed", "3", "--trajectory", str(out)]) == 0
    rows = parse_trajectory_csv(out)
    assert rows[0][0] == 0
    record = json.loads(capsys.readouterr().out)
    assert rows[-1][0] == record["generations"]


def test_run_controller_variants(capsys):
    assert main(["run", "--n", "80", "--lambda", "8", "--controller", "static:2.5", "--seed", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["controller"] == "static(r=2.5)"
    assert main(["run", "--n", "90", "--lambda", "9", "--controller", "two-rate", "--subpops", "3", "--seed", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["controller"] == "three-rate(F=2)"
    assert main(["run", "--n", "80", "--lambda", "8", "--controller", "fitness-dependent", "--seed", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["controller"] == "fitness-dependent"


def test_run_invalid_combination_is_usage_error(capsys):
    # three subpopulations cannot split lambda=10
    assert main(["run", "--n", "90", "--lambda", "10", "--controller", "three-rate", "--seed", "2"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "usage" in err


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--n", "10", "--lambda", "4", "--frobnicate"])
    assert exc.value.code == 2


def test_sweep_round_trip(tmp_path, capsys):
    config = tmp_path / "spec.json"
    write_config(config)
    out = tmp_path / "runs.csv"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == 0
    rows = parse_runs_csv(out)
    assert len(rows) == 4
    summaries = parse_summary_csv(tmp_path / "runs_summary.csv")
    assert len(summaries) == 2
    first = out.read_bytes()
    assert main(["sweep", "--config", str(config), "--out", str(out), "--workers", "2"]) == 0
    assert out.read_bytes() == first


def test_sweep_missing_config_fails_without_output(tmp_path, capsys):
    out = tmp_path / "runs.csv"
    code = main(["sweep", "--config", str(tmp_path / "missing.json"), "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_sweep_invalid_cell_fails_before_running(tmp_path, capsys):
    config = tmp_path / "bad.json"
    write_config(config, lambdas=(9,), controllers=(ControllerSpec(kind="two-rate"),))
    out = tmp_path / "runs.csv"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == 2
    assert not out.exists()


def test_verify_claim_runs_and_writes_csv(tmp_path, capsys):
    out = tmp_path / "verify.csv"
    assert main(["verify", "--claim", "halving-floor", "--out", str(out)]) == 0
    text = out.read_text().splitlines()
    assert text[0] == "claim,params,preconditions_ok,estimate,ci_low,ci_high,threshold,pass"
    assert text[1].startswith("halving-floor,")
    assert "pass=true" in capsys.readouterr().out


def test_drift_table(tmp_path):
    out = tmp_path / "drift.csv"
    assert main(["drift", "--n", "500", "--lambda", "10", "--k", "25,50", "--r", "2,4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,lambda,k,r,drift,truncation_ok"
    assert len(lines) == 5


def test_plot_from_sweep(tmp_path, capsys):
    config = tmp_path / "spec.json"
    write_config(config)
    out = tmp_path / "runs.csv"
    main(["sweep", "--config", str(config), "--out", str(out)])
    svg = tmp_path / "fig.svg"
    assert main(["plot", "--kind", "runtime-vs-lambda", "--data", str(tmp_path / "runs_summary.csv"), "--out", str(svg)]) == 0
    assert svg.exists()
    assert (tmp_path / "fig_data.csv").exists()


def test_plot_trajectory(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    main(["run", "--n", "60", "--lambda", "6", "--seed", "3", "--trajectory", str(traj)])
    svg = tmp_path / "rate.svg"
    assert main(["plot", "--kind", "rate-vs-fitness", "--data", str(traj), "--out", str(svg), "--log-y"]) == 0
    assert svg.exists()
