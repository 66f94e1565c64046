"""
Data models for the simulated flux sensor: detuning models, the sensor
configuration and equidistant flux grids.

Unit convention used throughout the package:
    rates (gamma1, gamma_phi) in 1/s, detunings and frequencies in rad/s,
    fluxes in units of the flux quantum, times in s.
"""
from dataclasses import dataclass, field, asdict, replace
from typing import ClassVar, Optional, Union
import math

import numpy as np

from ..errors import ConfigError, DegenerateModelError

UNITS_HEADER = "units: rates 1/s, detuning rad/s, flux Phi0, time s"

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LinearDetuning:
    """Detuning linear in flux around an operating point."""

    slope: float  # rad/s per flux quantum
    operating_flux: float = 0.3
    offset: float = 0.0  # rad/s at the operating flux

    kind: ClassVar[str] = "linear"

    def __post_init__(self):
        if self.slope == 0:
            raise DegenerateModelError("linear detuning needs a nonzero slope")

    def detuning(self, flux):
        return self.offset + self.slope * (np.asarray(flux, dtype=float) - self.operating_flux)

    def slope_at(self, flux: float) -> float:
        return float(self.slope)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class TransmonDetuning:
    """
    Split-junction transmon detuned from a fixed drive.

    omega_q(flux) = (max_frequency + |eta|) * sqrt(|cos(pi * flux)|) - |eta|
    """

    max_frequency: float  # rad/s, at the sweet spot
    anharmonicity: float  # rad/s, sign ignored
    drive_frequency: float  # rad/s
    operating_flux: float = 0.25

    kind: ClassVar[str] = "transmon"

    def __post_init__(self):
        if self.max_frequency <= 0:
            raise ConfigError("transmon max_frequency must be positive")

    def qubit_frequency(self, flux):
        eta = abs(self.anharmonicity)
        cos_term = np.abs(np.cos(np.pi * np.asarray(flux, dtype=float)))
        return (self.max_frequency + eta) * np.sqrt(cos_term) - eta

    def detuning(self, flux):
        return self.qubit_frequency(flux) - self.drive_frequency

    def slope_at(self, flux: float) -> float:
        eta = abs(self.anharmonicity)
        c = math.cos(math.pi * flux)
        if c == 0.0:
            raise DegenerateModelError(f"transmon spectrum is not differentiable at flux {flux}")
        return float(
            (self.max_frequency + eta)
            * math.copysign(1.0, c)
            * (-math.pi * math.sin(math.pi * flux))
            / (2.0 * math.sqrt(abs(c)))
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


DetuningModel = Union[LinearDetuning, TransmonDetuning]

_DETUNING_KINDS = {
    LinearDetuning.kind: LinearDetuning,
    TransmonDetuning.kind: TransmonDetuning,
}


def detuning_model_from_dict(data: dict) -> DetuningModel:
    """Create a detuning model from its dictionary form (``kind`` selects the variant)."""
    data = dict(data)
    kind = data.pop("kind", LinearDetuning.kind)
    if kind not in _DETUNING_KINDS:
        raise ConfigError(f"unknown detuning model kind '{kind}'")
    try:
        return _DETUNING_KINDS[kind](**data)
    except TypeError as e:
        raise ConfigError(f"bad {kind} detuning model: {e}")


def default_detuning() -> LinearDetuning:
    # 2.5 GHz/Phi0 with tau_min = 20 ns gives a 0.01 Phi0 single-qubit range
    return LinearDetuning(slope=TWO_PI * 2.5e9, operating_flux=0.3, offset=0.0)


@dataclass(frozen=True)
class SensorConfig:
    """The simulated device: register size, noise rates and flux response."""

    n_qubits: int = 1
    gamma1: float = 0.2e6
    gamma_phi: float = 0.034e6
    alpha: float = 1.0
    detuning_model: DetuningModel = field(default_factory=default_detuning)
    tau_min: float = 20e-9
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.n_qubits, (int, np.integer)) or self.n_qubits < 1:
            raise ConfigError(f"n_qubits must be an integer >= 1, got {self.n_qubits!r}")
        if self.gamma1 < 0 or self.gamma_phi < 0:
            raise ConfigError("decoherence rates must be non-negative")
        if not 1.0 <= self.alpha <= 2.0:
            raise ConfigError(f"alpha must lie in [1, 2], got {self.alpha}")
        if self.tau_min <= 0:
            raise ConfigError("tau_min must be positive")
        if not self.label:
            object.__setattr__(self, "label", f"N{self.n_qubits}_alpha{self.alpha:g}")

    @property
    def total_gamma1(self) -> float:
        return self.n_qubits * self.gamma1

    @property
    def total_gamma_phi(self) -> float:
        return self.n_qubits ** self.alpha * self.gamma_phi

    @property
    def decay_rate(self) -> float:
        """Envelope exponent N*gamma1/2 + N^alpha*gamma_phi of the N-qubit pattern."""
        return self.total_gamma1 / 2.0 + self.total_gamma_phi

    @property
    def t2_star(self) -> float:
        rate = self.decay_rate
        return math.inf if rate == 0 else 1.0 / rate

    @property
    def operating_flux(self) -> float:
        return self.detuning_model.operating_flux

    @property
    def slope(self) -> float:
        """Detuning slope k = d(delta omega)/d(flux) at the operating point."""
        return self.detuning_model.slope_at(self.operating_flux)

    @property
    def is_noiseless(self) -> bool:
        return self.gamma1 == 0 and self.gamma_phi == 0

    def flux_window(self) -> tuple[float, float]:
        """Dynamic-range window, starting at the operating flux and extending along the slope."""
        from .physics import dynamic_range

        span = dynamic_range(self)
        if self.slope > 0:
            return self.operating_flux, self.operating_flux + span
        return self.operating_flux - span, self.operating_flux

    def detuning(self, flux):
        """Detuning for flux values inside this sensor's dynamic range."""
        from .physics import detuning

        return detuning(self.detuning_model, flux, flux_range=self.flux_window())

    def with_qubits(self, n_qubits: int) -> "SensorConfig":
        return replace(self, n_qubits=n_qubits, label="")

    def noiseless(self) -> "SensorConfig":
        """The same device with every decoherence rate set to zero (ideal QEC limit)."""
        return replace(self, gamma1=0.0, gamma_phi=0.0, label=f"{self.label}_qec")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n_qubits": int(self.n_qubits),
            "gamma1": self.gamma1,
            "gamma_phi": self.gamma_phi,
            "alpha": self.alpha,
            "tau_min": self.tau_min,
            "detuning_model": self.detuning_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SensorConfig":
        data = dict(data)
        model = data.pop("detuning_model", None)
        if model is not None:
            data["detuning_model"] = detuning_model_from_dict(model)
        return cls(**data)


@dataclass(frozen=True)
class FluxGrid:
    """Equidistant candidate fluxes: start + i * step for i in [0, count)."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("flux grid step must be positive")
        if self.count < 2:
            raise ConfigError("flux grid needs at least two points")

    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def span(self) -> float:
        """Width covered by the grid cells (count * step)."""
        return self.count * self.step

    def index_of(self, flux: float, rtol: float = 1e-6) -> Optional[int]:
        """Index of the grid point equal to ``flux`` within rtol * step, else None."""
        position = (flux - self.start) / self.step
        index = int(round(position))
        if 0 <= index < self.count and abs(position - index) <= rtol:
            return index
        return None

    def contains(self, flux: float, rtol: float = 1e-6) -> bool:
        return self.index_of(flux, rtol) is not None
