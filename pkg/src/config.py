"""
Experiment configuration.

An experiment file is JSON with the blocks ``sensors`` (or a single ``sensor``),
``pea``, ``sweep``, ``pattern``, ``verify`` and ``output``. A file may be laid
over a shipped preset; command-line flags override both. Unknown keys are
rejected with the line they appear on.
"""
from dataclasses import dataclass, field, asdict, replace
import json
import logging
import re
from typing import Any, Optional

from .errors import ConfigError
from .estimation.kitaev import PeaConfig
from .models.sensor import SensorConfig

logger = logging.getLogger(__name__)

PRESET_NAMES = ("paper-fig4", "desk", "qec", "custom", "fig2b")

_ALLOWED = {
    "": {"description", "sensors", "sensor", "pea", "sweep", "pattern", "verify", "output"},
    "sensor": {"label", "n_qubits", "gamma1", "gamma_phi", "alpha", "tau_min", "detuning_model"},
    "detuning_model:linear": {"kind", "slope", "operating_flux", "offset"},
    "detuning_model:transmon": {"kind", "max_frequency", "anharmonicity", "drive_frequency", "operating_flux"},
    "pea": {
        "epsilon", "max_steps", "shot_cap", "cap_policy", "decision_rule", "readout", "first_block", "max_block",
    },
    "readout": {"mu0", "mu1", "sigma0", "sigma1"},
    "sweep": {"F", "M", "seed", "preset", "base_points"},
    "pattern": {"sensor", "taus", "tau_stop", "tau_count", "flux_points", "engine", "fixed_flux"},
    "verify": {"n_flux", "n_tau", "cptp_sequences", "gate_time_s", "angle_error", "snapshot_dir"},
    "output": {"directory", "workers"},
}


@dataclass(frozen=True)
class SweepConfig:
    F: int = 256
    M: int = 24
    seed: int = 0
    preset: str = "custom"
    base_points: int = 2048

    def __post_init__(self):
        if self.F < 1 or self.M < 1:
            raise ConfigError("F and M must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.preset not in PRESET_NAMES:
            raise ConfigError(f"preset must be one of {', '.join(PRESET_NAMES)}, got '{self.preset}'")
        if self.base_points < 2:
            raise ConfigError("base_points must be at least 2")


@dataclass(frozen=True)
class PatternConfig:
    """
    Delays are ``taus`` when given, else ``tau_count`` points over [0, tau_stop]
    (tau_stop defaults to the sensor's T2*, or 10 us without decoherence).
    """

    sensor: int = 0
    taus: Optional[tuple] = None
    tau_stop: Optional[float] = None
    tau_count: int = 101
    flux_points: int = 201
    engine: bool = False
    fixed_flux: Optional[float] = None

    def __post_init__(self):
        if self.taus is not None:
            object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
            if not self.taus or min(self.taus) < 0:
                raise ConfigError("pattern taus must be a non-empty list of non-negative delays")
        if self.tau_count < 1 or self.flux_points < 2:
            raise ConfigError("pattern needs tau_count >= 1 and flux_points >= 2")


@dataclass(frozen=True)
class VerifyConfig:
    n_flux: int = 64
    n_tau: int = 64
    cptp_sequences: int = 1000
    gate_time_s: float = 0.0
    angle_error: float = 0.0
    snapshot_dir: Optional[str] = None

    def __post_init__(self):
        if self.n_flux < 1 or self.n_tau < 1 or self.cptp_sequences < 0:
            raise ConfigError("verify grid sizes must be positive")
        if self.gate_time_s < 0:
            raise ConfigError("gate_time_s must be non-negative")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


@dataclass(frozen=True)
class ExperimentSpec:
    sensors: tuple = field(default_factory=lambda: (SensorConfig(),))
    pea: PeaConfig = field(default_factory=PeaConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    pattern: PatternConfig = field(default_factory=PatternConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if not self.sensors:
            raise ConfigError("at least one sensor is required")
        labels = [s.label for s in self.sensors]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"sensor labels must be unique, got {labels}")
        if not 0 <= self.pattern.sensor < len(self.sensors):
            raise ConfigError(f"pattern.sensor {self.pattern.sensor} does not name a configured sensor")

    def experiment_config(self) -> dict:
        """Settings that determine the step records; hashed into every record file."""
        return {
            "sensors": [s.to_dict() for s in self.sensors],
            "pea": self.pea.to_dict(),
            "sweep": asdict(self.sweep),
        }

    def to_dict(self) -> dict:
        """Every resolved setting; the header of pattern, verification and analysis artifacts."""
        data = self.experiment_config()
        data["pattern"] = asdict(self.pattern)
        data["pattern"]["taus"] = list(self.pattern.taus) if self.pattern.taus is not None else None
        data["verify"] = asdict(self.verify)
        data["output"] = asdict(self.output)
        data["description"] = self.description
        return data


def line_of(text: Optional[str], key: str) -> Optional[int]:
    """1-based line of the first ``"key":`` in ``text``."""
    if not text:
        return None
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class _Parser:
    def __init__(self, text: Optional[str], source: Optional[str]):
        self.text = text
        self.source = source

    def error(self, message: str, key: str) -> ConfigError:
        return ConfigError(message, line=line_of(self.text, key), source=self.source)

    def check_keys(self, data: Any, scope: str, key: str):
        if not isinstance(data, dict):
            raise self.error(f"'{key}' must be an object", key)
        unknown = sorted(set(data) - _ALLOWED[scope])
        if unknown:
            raise self.error(f"unknown key '{unknown[0]}' in {key or 'top level'}", unknown[0])

    def build(self, factory, data: dict, key: str):
        try:
            return factory(data)
        except ConfigError as e:
            if e.line is not None:
                raise
            raise self.error(str(e), key)
        except (TypeError, ValueError) as e:
            raise self.error(str(e), key)

    def sensor(self, data: dict) -> SensorConfig:
        self.check_keys(data, "sensor", "sensors")
        model = data.get("detuning_model")
        if model is not None:
            kind = model.get("kind", "linear") if isinstance(model, dict) else None
            if kind not in ("linear", "transmon"):
                raise self.error(f"unknown detuning model kind '{kind}'", "kind")
            self.check_keys(model, f"detuning_model:{kind}", "detuning_model")
        return self.build(SensorConfig.from_dict, data, "detuning_model" if model else "n_qubits")

    def pea(self, data: dict) -> PeaConfig:
        self.check_keys(data, "pea", "pea")
        if "readout" in data:
            self.check_keys(data["readout"], "readout", "readout")
        return self.build(PeaConfig.from_dict, data, "pea")

    def block(self, cls, data: dict, key: str):
        self.check_keys(data, key, key)
        return self.build(lambda d: cls(**d), data, key)

    def spec(self, data: dict) -> ExperimentSpec:
        self.check_keys(data, "", "")
        if "sensors" in data and "sensor" in data:
            raise self.error("use either 'sensors' or 'sensor', not both", "sensor")
        raw_sensors = data.get("sensors", [data["sensor"]] if "sensor" in data else [{}])
        if not isinstance(raw_sensors, list):
            raise self.error("'sensors' must be a list", "sensors")
        sensors = [self.sensor(s) for s in raw_sensors]
        try:
            return ExperimentSpec(
                sensors=sensors,
                pea=self.pea(data.get("pea", {})),
                sweep=self.block(SweepConfig, data.get("sweep", {}), "sweep"),
                pattern=self.block(PatternConfig, data.get("pattern", {}), "pattern"),
                verify=self.block(VerifyConfig, data.get("verify", {}), "verify"),
                output=self.block(OutputConfig, data.get("output", {}), "output"),
                description=data.get("description", ""),
            )
        except ConfigError as e:
            if e.line is not None:
                raise
            raise self.error(str(e), "sensors")


def parse_json(text: str, source: Optional[str] = None) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno, source=source)
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", line=1, source=source)
    return data


def spec_from_dict(data: dict, text: Optional[str] = None, source: Optional[str] = None) -> ExperimentSpec:
    return _Parser(text, source).spec(data)


def load_spec(
    path: Optional[str] = None,
    preset: Optional[str] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    out: Optional[str] = None,
) -> ExperimentSpec:
    """
    Resolve the experiment: preset (if any), then the file laid over it, then flags.

    Raises:
        ConfigError: with the offending line when the file is at fault
    """
    from .data.presets import load_preset_data

    data: dict = {}
    text = None
    if preset:
        data = load_preset_data(preset)
    if path:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
        user = parse_json(text, source=path)
        _Parser(text, path).check_keys(user, "", "")
        data = deep_merge(data, user)
    if preset and "preset" not in data.get("sweep", {}):
        data = deep_merge(data, {"sweep": {"preset": preset}})

    spec = spec_from_dict(data, text, path)
    spec = apply_overrides(spec, seed=seed, workers=workers, out=out)
    logger.info("configuration resolved: %d sensor(s), preset %s", len(spec.sensors), spec.sweep.preset)
    return spec


def apply_overrides(
    spec: ExperimentSpec, seed: Optional[int] = None, workers: Optional[int] = None, out: Optional[str] = None
) -> ExperimentSpec:
    sweep, output = spec.sweep, spec.output
    if seed is not None:
        sweep = replace(sweep, seed=seed)
    if workers is not None:
        output = replace(output, workers=workers)
    if out is not None:
        output = replace(output, directory=out)
    return replace(spec, sweep=sweep, output=output)
