"""Scenario config parsing (strict schema) and CLI behavior / exit codes."""

import json
import subprocess
import sys

import pytest

from needledrive.cli import main
from needledrive.config import ConfigError, load_scenario, parse_scenario, scenario_to_dict

VALID_SCENARIO = {
    "seed": 1234,
    "screw": {"lead_mm": 20.0, "starts": 4, "handedness": 1},
    "transmission": {"slave_pulley": "Slave Pulley 1"},
    "motors": {"rated_rpm": 150.0, "real_rpm_cap": 75.0},
    "encoder": {"lines_per_rev": 1250, "quadrature": 4},
    "controller": {
        "insertion_tol_mm": 0.05,
        "rotary_tol_deg": 0.5,
        "insertion_speed_rpm": 67.2,
        "rotary_speed_rpm": 67.2,
        "pid": {"kp": 0.8, "ki": 20.0, "kd": 0.0, "integral_limit_rpm": 10.0,
                "enabled": False},
    },
    "noise": {"sigma_intercept": 0.5, "sigma_slope": 0.018, "bias_slope": -0.002},
    "experiments": [
        {"kind": "accuracy", "axis": "insertion", "target": 8.3, "repetitions": 5},
        {"kind": "accuracy", "axis": "rotary", "target": 95.4, "repetitions": 5},
        {"kind": "drift", "revolutions": 7, "epsilon": 0.015},
    ],
}


class TestScenarioParsing:
    def test_valid_scenario_parses(self):
        cfg = parse_scenario(VALID_SCENARIO)
        assert cfg.seed == 1234
        assert cfg.transmission.slave_teeth == 60
        assert len(cfg.experiments) == 3

    def test_round_trip_is_identity(self):
        cfg = parse_scenario(VALID_SCENARIO)
        again = parse_scenario(scenario_to_dict(cfg))
        assert again == cfg
        assert scenario_to_dict(again) == scenario_to_dict(cfg)

    def test_minimal_scenario_uses_defaults(self):
        cfg = parse_scenario({"seed": 7})
        assert cfg.screw.lead == 20.0
        assert cfg.controller.pid_ki == 20.0

    def test_unknown_top_level_key_named(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_scenario({"seed": 1, "bogus": {}})

    def test_unknown_nested_key_named(self):
        raw = {"seed": 1, "controller": {"pid": {"kq": 1.0}}}
        with pytest.raises(ConfigError, match="controller.pid.kq"):
            parse_scenario(raw)

    def test_missing_seed_rejected(self):
        with pytest.raises(ConfigError, match="seed"):
            parse_scenario({})

    def test_wrong_type_named(self):
        with pytest.raises(ConfigError, match="screw.lead_mm"):
            parse_scenario({"seed": 1, "screw": {"lead_mm": "twenty"}})

    def test_unknown_pulley_rejected(self):
        with pytest.raises(ConfigError, match="slave_pulley"):
            parse_scenario({"seed": 1, "transmission": {"slave_pulley": "Slave Pulley 9"}})

    def test_pulley_and_teeth_are_exclusive(self):
        raw = {"seed": 1, "transmission": {"slave_pulley": "Slave Pulley 1",
                                           "master_teeth": 24}}
        with pytest.raises(ConfigError, match="transmission"):
            parse_scenario(raw)

    def test_cross_field_validation(self):
        raw = {"seed": 1, "controller": {"insertion_speed_rpm": 100.0}}
        with pytest.raises(ConfigError, match="real_speed_cap"):
            parse_scenario(raw)  # over the 75 rpm default cap

    def test_unknown_experiment_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            parse_scenario({"seed": 1, "experiments": [{"kind": "latency"}]})

    def test_bad_json_file_reports_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(path)


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(VALID_SCENARIO, indent=2))
    return path


class TestCliRun:
    def test_run_writes_csv_report(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "results.csv"
        assert main(["run", "--config", str(scenario_file), "--out", str(out)]) == 0
        text = out.read_text()
        assert "# accuracy" in text
        assert "target,mean_error,std_dev,n" in text
        assert "# drift" in text
        assert text.count("\n") >= 7

    def test_run_json_format(self, scenario_file, tmp_path):
        out = tmp_path / "results.json"
        assert main(["run", "--config", str(scenario_file), "--out", str(out),
                     "--format", "json"]) == 0
        doc = json.loads(out.read_text())
        assert doc["seed"] == 1234
        assert len(doc["accuracy"]) == 2
        assert len(doc["drift"]) == 1
        assert doc["drift"][0]["insertion_drift_mm"] == pytest.approx(2.1, rel=0.01)

    def test_same_seed_gives_byte_identical_reports(self, scenario_file, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", str(scenario_file), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(scenario_file), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_config_file_is_usage_error(self, tmp_path, capsys):
        rc = main(["run", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "x.csv")])
        assert rc == 2
        assert "not found" in capsys.readouterr().err

    def test_invalid_config_key_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"seed": 1, "turbo": True}))
        rc = main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")])
        assert rc == 3
        assert "turbo" in capsys.readouterr().err

    def test_non_convergent_trial_is_experiment_failure(self, tmp_path, capsys):
        # a target the 75 rpm cap cannot reach within the trial timeout
        scenario = dict(VALID_SCENARIO, experiments=[
            {"kind": "accuracy", "axis": "insertion", "target": 25000.0,
             "repetitions": 1},
        ])
        path = tmp_path / "stuck.json"
        path.write_text(json.dumps(scenario))
        rc = main(["run", "--config", str(path), "--out", str(tmp_path / "x.csv")])
        assert rc == 4
        assert "experiment failed" in capsys.readouterr().err


class TestCliDrift:
    def test_default_drift_prints_reference_numbers(self, capsys):
        assert main(["drift"]) == 0
        out = capsys.readouterr().out
        assert "insertion drift" in out
        drift = float([l for l in out.splitlines() if "insertion drift" in l][0]
                      .split()[-2])
        assert drift == pytest.approx(2.1, rel=0.01)

    def test_zero_epsilon_drifts_nothing(self, capsys):
        assert main(["drift", "--epsilon", "0", "--revs", "7"]) == 0
        out = capsys.readouterr().out
        drift = float([l for l in out.splitlines() if "insertion drift" in l][0]
                      .split()[-2])
        assert abs(drift) <= 0.004

    def test_out_of_range_epsilon_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["drift", "--epsilon", "0.5"])
        assert exc.value.code == 2

    def test_pid_flag_suppresses_drift(self, capsys):
        assert main(["drift", "--pid"]) == 0
        out = capsys.readouterr().out
        drift = float([l for l in out.splitlines() if "insertion drift" in l][0]
                      .split()[-2])
        assert abs(drift) < 0.105


class TestCliSpeedTable:
    def test_default_prints_rated_and_real_columns(self, capsys):
        assert main(["speed-table"]) == 0
        out = capsys.readouterr().out
        row = [l for l in out.splitlines() if l.startswith("Slave Pulley 1")][0]
        assert "375" in row and "187.5" in row
        assert "450" in out and "225" in out

    def test_scaled_column(self, capsys):
        assert main(["speed-table", "--input-rpm", "100"]) == 0
        out = capsys.readouterr().out
        for value in ("250", "200", "150", "100", "300"):
            assert value in out

    def test_zero_input(self, capsys):
        assert main(["speed-table", "--input-rpm", "0"]) == 0
        out = capsys.readouterr().out
        assert out.count(" 0") >= 5


class TestCliServe:
    def test_out_of_range_port_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["serve", "--port", "99999"])
        assert exc.value.code == 2

    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        rc = main(["serve", "--config", str(tmp_path / "nope.json")])
        assert rc == 2


class TestCliAsSubprocess:
    def test_console_invocation_deterministic_stdout(self, scenario_file):
        cmd = [sys.executable, "-m", "needledrive.cli", "drift",
               "--epsilon", "0.015", "--revs", "7"]
        first = subprocess.run(cmd, capture_output=True, timeout=120)
        second = subprocess.run(cmd, capture_output=True, timeout=120)
        assert first.returncode == 0
        assert first.stdout == second.stdout
