import json

import pytest
from click.testing import CliRunner

from src.cli import EXIT_RUNTIME, EXIT_VALIDATION, EXIT_VERIFICATION, cli
from src.pipeline.persistence import read_frame, read_header

SMALL_EXPERIMENT = {
    "sensors": [{"n_qubits": 1}, {"n_qubits": 2}],
    "pea": {"max_steps": 3, "shot_cap": 2000},
    "sweep": {"F": 2, "M": 2, "seed": 3, "base_points": 64},
}

QUICK_VERIFY = {"verify": {"n_flux": 2, "n_tau": 2, "cptp_sequences": 3}}


@pytest.fixture
def runner():
    return CliRunner()


def write_json(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def test_pattern_closed_form(runner, tmp_path):
    out = tmp_path / "pattern"
    result = runner.invoke(cli, ["pattern", "--preset", "custom", "--out", str(out), "--seed", "42"])
    assert result.exit_code == 0, result.output
    frame = read_frame(str(out / "pattern_N1.csv"), index_col=0)
    assert frame.shape == (201, 101)
    assert (frame.to_numpy() >= 0).all() and (frame.to_numpy() <= 1).all()
    assert (out / "plot_pattern_N1.py").exists()
    header = read_header(str(out / "pattern_N1.csv"))
    assert {"pattern", "sensors", "pea", "sweep", "verify"} <= set(header["config"])
    assert header["seed"] == "42"
    assert read_header(str(out / "plot_pattern_N1.py"))["config_hash"] == header["config_hash"]


def test_pattern_with_engine_and_trace(runner, tmp_path):
    config = write_json(tmp_path, {
        "sensor": {"n_qubits": 2},
        "pattern": {"engine": True, "tau_count": 3, "flux_points": 4, "fixed_flux": 0.301},
    })
    out = tmp_path / "engine"
    result = runner.invoke(cli, ["pattern", "--config", config, "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert read_frame(str(out / "pattern_N2_alpha1.csv"), index_col=0).shape == (4, 3)
    trace = read_frame(str(out / "trace_N2_alpha1.csv"))
    assert list(trace.columns) == ["tau_s", "p1_single", "p10_pair"]
    assert (out / "plot_trace_N2_alpha1.py").exists()
    assert read_header(str(out / "trace_N2_alpha1.csv"))["seed"] != "none"


def test_verify_passes(runner, tmp_path):
    config = write_json(tmp_path, QUICK_VERIFY)
    result = runner.invoke(cli, ["verify", "--config", config, "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = read_frame(str(tmp_path / "verify_report.csv"))
    assert report["passed"].all()
    assert "entangler_fidelity_N2" in report["check"].tolist()


def test_verify_snapshots_carry_run_header(runner, tmp_path):
    snapshots = tmp_path / "rho"
    config = write_json(tmp_path, {"verify": {**QUICK_VERIFY["verify"], "snapshot_dir": str(snapshots)}})
    result = runner.invoke(cli, ["verify", "--config", config, "--out", str(tmp_path), "--seed", "8"])
    assert result.exit_code == 0, result.output
    dumps = sorted(snapshots.glob("rho_*.csv"))
    assert dumps
    header = read_header(str(dumps[0]))
    assert header["seed"] == "8"
    assert header["config"]["verify"]["snapshot_dir"] == str(snapshots)


def test_verify_detects_gate_angle_error(runner, tmp_path):
    config = write_json(tmp_path, QUICK_VERIFY)
    result = runner.invoke(
        cli, ["verify", "--config", config, "--out", str(tmp_path), "--gate-angle-error", "0.3"]
    )
    assert result.exit_code == EXIT_VERIFICATION
    report = read_frame(str(tmp_path / "verify_report.csv")).set_index("check")
    assert not report.loc["entangler_fidelity_N2", "passed"]


def test_sense_then_analyze(runner, tmp_path):
    config = write_json(tmp_path, SMALL_EXPERIMENT)
    out = tmp_path / "run"
    result = runner.invoke(cli, ["sense", "--config", config, "--out", str(out), "--quiet"])
    assert result.exit_code == 0, result.output
    assert (out / "records_N1_alpha1.csv").exists()
    assert (out / "records_N2_alpha1.csv").exists()

    result = runner.invoke(cli, ["analyze", str(out), "--bootstrap", "10"])
    assert result.exit_code == 0, result.output
    summary = read_frame(str(out / "summary_N2_alpha1.csv"))
    assert summary["l"].tolist() == [1, 2, 3]
    advantage = read_frame(str(out / "advantage.csv"))
    assert {"N1_alpha1", "N2_alpha1"} <= set(advantage.columns)
    assert (out / "plot_summary.py").exists()
    scaling = read_frame(str(out / "scaling.csv")).set_index("label")
    assert set(scaling.index) == {"N1_alpha1", "N2_alpha1"}
    assert {"early_slope", "late_slope", "late_limit", "saturation_step"} <= set(scaling.columns)


def test_sense_seed_flag_changes_hash(runner, tmp_path):
    config = write_json(tmp_path, SMALL_EXPERIMENT)
    out = tmp_path / "run"
    assert runner.invoke(cli, ["sense", "--config", config, "--out", str(out), "-q"]).exit_code == 0
    result = runner.invoke(cli, ["sense", "--config", config, "--out", str(out), "-q", "--seed", "4"])
    assert result.exit_code == EXIT_RUNTIME
    assert "configuration" in result.output


def test_bad_configuration_exits_with_validation_code(runner, tmp_path):
    config = write_json(tmp_path, {"pea": {"epsilon": 2.0}})
    result = runner.invoke(cli, ["sense", "--config", config, "--out", str(tmp_path / "x")])
    assert result.exit_code == EXIT_VALIDATION
    assert "epsilon" in result.output


def test_analyze_without_records(runner, tmp_path):
    result = runner.invoke(cli, ["analyze", str(tmp_path)])
    assert result.exit_code == EXIT_RUNTIME


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "flux-sense" in result.output
