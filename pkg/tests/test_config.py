import json

import pytest

from src.config import PRESET_NAMES, load_spec, spec_from_dict
from src.data.presets import available_presets
from src.errors import ConfigError
from src.models.sensor import TransmonDetuning


def write_config(tmp_path, text):
    path = tmp_path / "experiment.json"
    path.write_text(text)
    return str(path)


def test_every_preset_is_shipped_and_loads():
    assert set(available_presets()) == set(PRESET_NAMES)
    for name in PRESET_NAMES:
        spec = load_spec(preset=name)
        assert spec.sweep.preset == name


def test_desk_preset():
    spec = load_spec(preset="desk")
    assert [s.label for s in spec.sensors] == ["N1", "N2_alpha1", "N2_alpha2", "N3_alpha1", "N3_alpha2", "qec_N1"]
    assert (spec.sweep.F, spec.sweep.M) == (32, 8)
    assert spec.sensors[-1].is_noiseless


def test_transmon_preset():
    spec = load_spec(preset="fig2b")
    assert isinstance(spec.sensors[0].detuning_model, TransmonDetuning)
    assert spec.pattern.engine
    assert spec.pattern.fixed_flux == pytest.approx(0.1495)


def test_file_is_laid_over_preset(tmp_path):
    path = write_config(tmp_path, json.dumps({"sweep": {"F": 4}, "pea": {"max_steps": 5}}))
    spec = load_spec(path, preset="desk")
    assert (spec.sweep.F, spec.sweep.M) == (4, 8)
    assert spec.pea.max_steps == 5
    assert spec.pea.readout.sigma0 == pytest.approx(1.5)


def test_flags_override_file(tmp_path):
    path = write_config(tmp_path, json.dumps({"sweep": {"seed": 3}, "output": {"workers": 2}}))
    spec = load_spec(path, seed=9, workers=4, out=str(tmp_path / "out"))
    assert spec.sweep.seed == 9
    assert spec.output.workers == 4
    assert spec.output.directory == str(tmp_path / "out")


def test_unknown_key_reports_line(tmp_path):
    text = '{\n  "sweep": {"F": 4},\n  "pea": {"epsilon": 0.001, "bogus": 1}\n}\n'
    path = write_config(tmp_path, text)
    with pytest.raises(ConfigError) as excinfo:
        load_spec(path)
    assert excinfo.value.line == 3
    assert f"{path}:3:" in str(excinfo.value)
    assert "bogus" in str(excinfo.value)


def test_invalid_value_reports_line(tmp_path):
    text = '{\n  "sweep": {"F": 4},\n  "pea": {"epsilon": 0.9}\n}\n'
    with pytest.raises(ConfigError) as excinfo:
        load_spec(write_config(tmp_path, text))
    assert excinfo.value.line == 3


def test_malformed_json_reports_line(tmp_path):
    text = '{\n  "sweep": {"F": 4},\n  "pea": {"epsilon": }\n}\n'
    with pytest.raises(ConfigError) as excinfo:
        load_spec(write_config(tmp_path, text))
    assert excinfo.value.line == 3


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_spec(preset="nonexistent")


def test_single_sensor_block():
    spec = spec_from_dict({"sensor": {"n_qubits": 2, "alpha": 2.0}})
    assert spec.sensors[0].label == "N2_alpha2"


def test_duplicate_labels_are_rejected():
    with pytest.raises(ConfigError):
        spec_from_dict({"sensors": [{"n_qubits": 1}, {"n_qubits": 1}]})


def test_unknown_detuning_kind():
    with pytest.raises(ConfigError):
        spec_from_dict({"sensor": {"detuning_model": {"kind": "parabolic"}}})


def test_experiment_config_excludes_output():
    spec = load_spec(preset="custom")
    config = spec.experiment_config()
    assert set(config) == {"sensors", "pea", "sweep"}
    assert config["sweep"]["preset"] == "custom"
