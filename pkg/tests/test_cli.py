"""End-to-end tests of the ``qubitbench`` command-line interface.

Each test launches the CLI in a subprocess, so argument parsing, config
resolution, output formatting, and exit codes are exercised exactly as a
user would see them.
"""

import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from qubitbench.cliffords import build_clifford_table

# a deliberately tiny randomized-benchmarking run for fast CLI round trips
TINY_RB = (
    "rb",
    "--lengths", "20,60",
    "--sequences", "3",
    "--shots", "20",
    "--noise", "depol",
    "--depol", "1e-3",
)


def run_cli(*args, env_extra=None):
    """Run the CLI in a subprocess with a clean QUBITBENCH_* environment."""
    env = {k: v for k, v in os.environ.items() if not k.startswith("QUBITBENCH_")}
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "qubitbench.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


class TestEntryPoints:
    def test_console_script_reports_version(self):
        exe = shutil.which("qubitbench")
        assert exe is not None
        proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("qubitbench ")

    def test_subcommand_is_required(self):
        proc = run_cli()
        assert proc.returncode == 2

    def test_unknown_flag_rejected(self):
        proc = run_cli(*TINY_RB, "--no-such-flag", "1")
        assert proc.returncode == 2


class TestRunStamp:
    def test_json_documents_carry_a_run_block(self):
        proc = run_cli(*TINY_RB, "--seed", "11")
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        run = doc["run"]
        assert run["command"] == "rb"
        assert run["seed"] == 11
        assert isinstance(run["version"], str) and run["version"]
        assert len(run["config_hash"]) == 16
        int(run["config_hash"], 16)  # hex digest prefix

    def test_reruns_are_byte_identical(self):
        a = run_cli(*TINY_RB, "--seed", "11")
        b = run_cli(*TINY_RB, "--seed", "11")
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout

    def test_seed_changes_data_and_hash(self):
        noisy = TINY_RB[:-1] + ("5e-2",)  # enough errors that counts cannot tie
        a = json.loads(run_cli(*noisy, "--seed", "11").stdout)
        b = json.loads(run_cli(*noisy, "--seed", "12").stdout)
        assert a["run"]["config_hash"] != b["run"]["config_hash"]
        errors = lambda doc: [r["errors"] for r in doc["dataset"]["records"]]
        assert errors(a) != errors(b)

    def test_parameter_changes_the_hash(self):
        a = json.loads(run_cli(*TINY_RB, "--seed", "11").stdout)
        b = json.loads(run_cli(*TINY_RB[:-1], "2e-3", "--seed", "11").stdout)
        assert a["run"]["config_hash"] != b["run"]["config_hash"]


class TestSeedAndWorkers:
    def test_env_seed_is_the_fallback(self):
        doc = json.loads(run_cli(*TINY_RB, env_extra={"QUBITBENCH_SEED": "123"}).stdout)
        assert doc["run"]["seed"] == 123

    def test_flag_beats_env_seed(self):
        proc = run_cli(*TINY_RB, "--seed", "5", env_extra={"QUBITBENCH_SEED": "123"})
        assert json.loads(proc.stdout)["run"]["seed"] == 5

    def test_default_seed_without_flag_or_env(self):
        doc = json.loads(run_cli(*TINY_RB).stdout)
        assert doc["run"]["seed"] == 20260825

    def test_worker_count_does_not_change_output(self):
        serial = run_cli(*TINY_RB, "--seed", "11", "--workers", "1")
        threaded = run_cli(*TINY_RB, "--seed", "11", "--workers", "3")
        via_env = run_cli(*TINY_RB, "--seed", "11", env_extra={"QUBITBENCH_WORKERS": "3"})
        assert serial.stdout == threaded.stdout == via_env.stdout

    def test_nonpositive_workers_fail_at_runtime(self):
        proc = run_cli(*TINY_RB, "--workers", "0")
        assert proc.returncode == 1
        assert "error" in proc.stderr


class TestConfigFiles:
    CONFIG = {
        "schema": "qubitbench.config.v1",
        "command": "rb",
        "lengths": "20,60",
        "sequences": 3,
        "shots": 20,
        "noise": "depol",
        "depol": 1e-3,
    }

    def _write(self, tmp_path, doc):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return str(path)

    def test_config_file_matches_flags(self, tmp_path):
        path = self._write(tmp_path, self.CONFIG)
        from_file = run_cli("rb", "--config", path, "--seed", "11")
        from_flags = run_cli(*TINY_RB, "--seed", "11")
        assert from_file.returncode == 0, from_file.stderr
        assert from_file.stdout == from_flags.stdout

    def test_flags_override_the_config(self, tmp_path):
        path = self._write(tmp_path, self.CONFIG)
        proc = run_cli("rb", "--config", path, "--seed", "11", "--shots", "10")
        doc = json.loads(proc.stdout)
        assert doc["dataset"]["meta"]["shots_per_sequence"] == 10
        assert {r["shots"] for r in doc["dataset"]["records"]} == {10}

    def test_wrong_schema_rejected(self, tmp_path):
        bad = dict(self.CONFIG, schema="qubitbench.config.v0")
        proc = run_cli("rb", "--config", self._write(tmp_path, bad))
        assert proc.returncode == 2
        assert "schema" in proc.stderr

    def test_unknown_key_rejected(self, tmp_path):
        bad = dict(self.CONFIG, shotss=20)
        proc = run_cli("rb", "--config", self._write(tmp_path, bad))
        assert proc.returncode == 2
        assert "shotss" in proc.stderr

    def test_command_mismatch_rejected(self, tmp_path):
        path = self._write(tmp_path, self.CONFIG)
        proc = run_cli("budget", "--config", path)
        assert proc.returncode == 2

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        proc = run_cli("rb", "--config", str(path))
        assert proc.returncode == 2

    def test_non_scalar_value_rejected(self, tmp_path):
        bad = dict(self.CONFIG, shots=[20, 30])
        proc = run_cli("rb", "--config", self._write(tmp_path, bad))
        assert proc.returncode == 2


class TestErrorsAndOutput:
    def test_runtime_error_exits_one(self):
        proc = run_cli("rb", "--lengths", "20", "--sequences", "2", "--shots", "5",
                       "--noise", "bogus")
        assert proc.returncode == 1
        assert "qubitbench: error:" in proc.stderr

    def test_out_writes_a_file(self, tmp_path):
        target = tmp_path / "result.json"
        proc = run_cli(*TINY_RB, "--seed", "11", "--out", str(target))
        assert proc.returncode == 0
        assert proc.stdout == ""
        doc = json.loads(target.read_text())
        assert doc["run"]["command"] == "rb"

    def test_rb_csv_format(self):
        proc = run_cli(*TINY_RB, "--seed", "11", "--format", "csv")
        lines = proc.stdout.splitlines()
        assert lines[0] == "length,seq_id,errors,shots"
        assert len(lines) == 1 + 2 * 3  # two lengths, three sequences each
        for line in lines[1:]:
            assert all(field.lstrip("-").isdigit() for field in line.split(","))


class TestSubcommands:
    def test_rb_fit_block(self):
        doc = json.loads(run_cli(*TINY_RB, "--seed", "11", "--bootstrap", "25").stdout)
        fit = doc["fit"]
        assert set(fit) >= {"epsilon", "amplitude", "converged", "at_boundary",
                            "identifiable", "epsilon_ci68"}
        lo, hi = fit["epsilon_ci68"]
        assert 0 <= lo <= hi

    def test_irmb_reports_slope_and_prediction(self):
        proc = run_cli(
            "irmb", "--seed", "3", "--delays", "0,5e-6", "--lengths", "60,200",
            "--sequences", "3", "--shots", "30",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert len(doc["points"]) == 2
        assert doc["predicted_slope_per_s"] == pytest.approx((52 / 24) / (3 * 69.0))
        assert np.isfinite(doc["slope_per_s"])

    def test_calibrate_jsonl_stream(self):
        proc = run_cli("calibrate", "--seed", "6", "--kind", "amplitude",
                       "--n-max", "64", "--shots", "100", "--format", "jsonl")
        assert proc.returncode == 0, proc.stderr
        records = [json.loads(line) for line in proc.stdout.splitlines()]
        assert records
        assert {r["kind"] for r in records} == {"amplitude"}
        assert all({"step", "n_group", "estimate", "sigma"} <= set(r) for r in records)

    def test_calibrate_json_summary(self):
        proc = run_cli("calibrate", "--seed", "6", "--kind", "both",
                       "--n-max", "64", "--shots", "100")
        doc = json.loads(proc.stdout)
        kinds = {r["kind"] for r in doc["records"]}
        assert kinds == {"amplitude", "frequency"}
        final = doc["final"]
        assert {"amp_setting", "detuning_setting", "wall_clock",
                "residual_relative_error"} <= set(final)
        assert final["wall_clock"] > 0

    def test_walsh_reports_coefficients(self):
        proc = run_cli("walsh", "--seed", "5", "--max-order", "3",
                       "--n-pulses", "16", "--shots", "200", "--sweep", "4,8,16")
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        doc = json.loads(proc.stdout)
        assert set(doc["coefficients"]) == {"1", "2", "3"}
        assert doc["sigma_rel"] > 0
        for entry in doc["coefficients"].values():
            assert {"coefficient", "sigma", "n_pulses", "p_zero"} <= set(entry)

    def test_phase_noise_default_psd(self):
        proc = run_cli("phase-noise", "--taus", "1,10", "--irmb-delays", "1e-6,1e-5")
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        for row in doc["curves"]:
            assert row["coherence_ramsey"] == pytest.approx(np.exp(-row["chi_ramsey"]))
            assert row["chi_echo"] >= 0
        assert 60 < doc["t2_ramsey_s"] < 80
        eps = [p["epsilon_increase"] for p in doc["irmb_prediction"]]
        assert eps[1] > eps[0] > 0

    def test_phase_noise_accepts_ssb_file(self, tmp_path):
        path = tmp_path / "ssb.csv"
        path.write_text("frequency_hz,dbc_per_hz\n1.0,-100.0\n1000000.0,-140.0\n")
        proc = run_cli("phase-noise", "--taus", "1", "--predict-t2", "0",
                       "--ssb", str(path))
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["curves"][0]["chi_ramsey"] > 0

    def test_budget_table_json(self):
        doc = json.loads(run_cli("budget").stdout)
        table = doc["budget"]
        names = {r["name"] for r in table["rows"]}
        assert {"decoherence", "idle_and_leakage", "amplitude_noise",
                "harmonic_motion", "amplitude_drift", "awg_resolution",
                "zeeman_residual"} <= names
        assert 1.6e-7 < table["total"] < 1.8e-7

    def test_budget_table_csv(self):
        proc = run_cli("budget", "--format", "csv")
        lines = proc.stdout.splitlines()
        assert lines[0] == "name,value,uncertainty,kind,note"
        assert lines[-1].startswith("total,")

    def test_budget_curve_csv(self):
        proc = run_cli("budget", "--curve", "1", "--curve-points", "5",
                       "--format", "csv")
        lines = proc.stdout.splitlines()
        assert lines[0].split(",")[0] == "gate_time"
        assert len(lines) == 1 + 5

    def test_idle_rates_recovers_truth(self):
        proc = run_cli("idle-rates", "--seed", "7", "--shots", "20000")
        doc = json.loads(proc.stdout)
        est, true = doc["estimated"], doc["true"]
        assert est["bright_per_s"] == pytest.approx(true["bright_per_s"], rel=0.3)
        assert doc["rb_error_rate_per_s"] > 0
        assert isinstance(doc["flip_consistent"], bool)

    def test_clifford_table_matches_library(self):
        proc = run_cli("clifford-table")
        assert proc.returncode == 0
        assert proc.stdout == build_clifford_table().to_json()
