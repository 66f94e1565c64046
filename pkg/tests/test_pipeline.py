import pandas as pd
import pytest

from src import __version__
from src.config import ExperimentSpec, OutputConfig, SweepConfig
from src.errors import ResumeMismatchError
from src.estimation.kitaev import PeaConfig
from src.models.experiment import RECORD_COLUMNS
from src.models.sensor import SensorConfig
from src.pipeline.orchestrator import ExperimentOrchestrator, records_path, run_experiment
from src.pipeline.persistence import (
    config_hash,
    read_frame,
    read_header,
    write_frame,
    write_pattern,
)

SMALL_BASE = 64


def small_spec(directory, workers=1, seed=3, sensors=None):
    return ExperimentSpec(
        sensors=sensors or (SensorConfig(), SensorConfig(n_qubits=2)),
        pea=PeaConfig(max_steps=3, shot_cap=2000),
        sweep=SweepConfig(F=2, M=2, seed=seed, base_points=SMALL_BASE),
        output=OutputConfig(directory=str(directory), workers=workers),
    )


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 40


def test_header_round_trip(tmp_path):
    path = str(tmp_path / "frame.csv")
    config = {"sweep": {"F": 2}}
    write_frame(pd.DataFrame({"x": [0.1, 1 / 3]}), path, config, seed=7, index=False)
    header = read_header(path)
    assert header["tool"] == f"flux-sense {__version__}"
    assert header["config"] == config
    assert header["seed"] == "7"
    assert header["config_hash"] == config_hash(config)
    assert header["units"].startswith("rates 1/s")
    assert read_frame(path)["x"].tolist() == pytest.approx([0.1, 1 / 3], rel=1e-14)


def test_pattern_file_layout(tmp_path):
    path = str(tmp_path / "pattern.csv")
    write_pattern(path, [0.30, 0.31], [0.0, 1e-7], [[1.0, 0.5], [1.0, 0.25]], {"pattern": {}})
    frame = read_frame(path, index_col=0)
    assert frame.index.name == "flux_phi0"
    assert list(frame.columns) == ["0.000000e+00", "1.000000e-07"]
    assert frame.iloc[1, 1] == pytest.approx(0.25)


def test_small_experiment(tmp_path):
    result = run_experiment(
        SensorConfig(), PeaConfig(max_steps=3, shot_cap=2000), F=2, M=2, seed=1,
        output_dir=str(tmp_path), base_points=SMALL_BASE,
    )
    assert result.is_rectangular()
    assert (result.n_fluxes, result.n_repetitions, result.n_steps) == (2, 2, 3)
    frame = read_frame(str(records_path(tmp_path, "N1_alpha1")))
    assert list(frame.columns) == RECORD_COLUMNS
    assert frame[["j", "k", "l"]].values.tolist() == sorted(frame[["j", "k", "l"]].values.tolist())


def test_records_do_not_depend_on_worker_count(tmp_path):
    serial = ExperimentOrchestrator(small_spec(tmp_path / "serial"), progress=False)
    serial.run()
    pooled = ExperimentOrchestrator(small_spec(tmp_path / "pooled", workers=2), progress=False)
    pooled.run()
    for label in ("N1_alpha1", "N2_alpha1"):
        first = records_path(tmp_path / "serial", label).read_bytes()
        second = records_path(tmp_path / "pooled", label).read_bytes()
        assert first == second


def test_sensors_share_test_fluxes(tmp_path):
    results = ExperimentOrchestrator(small_spec(tmp_path), progress=False).run()
    single, pair = results["N1_alpha1"], results["N2_alpha1"]
    assert single.true_fluxes == pytest.approx(pair.true_fluxes)


def test_resume_skips_completed_tasks(tmp_path):
    ExperimentOrchestrator(small_spec(tmp_path), progress=False).run()
    before = records_path(tmp_path, "N1_alpha1").read_bytes()

    again = ExperimentOrchestrator(small_spec(tmp_path), progress=False)
    again.run()
    summary = again.get_summary()
    assert summary["tasks_completed"] == 0
    assert summary["tasks_resumed"] == 8
    assert records_path(tmp_path, "N1_alpha1").read_bytes() == before
    assert (tmp_path / "checkpoint.json").exists()


def test_resume_reruns_incomplete_tasks(tmp_path):
    ExperimentOrchestrator(small_spec(tmp_path), progress=False).run()
    path = records_path(tmp_path, "N1_alpha1")
    complete = path.read_bytes()
    lines = complete.decode().splitlines(keepends=True)
    path.write_text("".join(lines[:-1]))

    again = ExperimentOrchestrator(small_spec(tmp_path), progress=False)
    again.run()
    assert again.stats["sensors"]["N1_alpha1"]["completed"] == 4
    assert again.get_summary()["tasks_completed"] == 1
    assert path.read_bytes() == complete


def test_resume_refuses_other_configuration(tmp_path):
    ExperimentOrchestrator(small_spec(tmp_path), progress=False).run()
    with pytest.raises(ResumeMismatchError):
        ExperimentOrchestrator(small_spec(tmp_path, seed=4), progress=False).run()
