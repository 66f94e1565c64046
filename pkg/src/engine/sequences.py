"""
Gate sequences of the entangled sensor, simulated from first principles.

Entangler: Ry_0(pi/2), then for each further qubit t: Ry_t(pi/2), CP10(0, t), Ry_t(-pi/2).
Projector: the same three-gate disentangler for t = N-1 .. 2, then
Ry_1(pi/2), CP00(0, 1), Ry_1(pi/2), Ry_0(pi/2). It leaves qubit 0 in
((-1 + e^{i phi})|0> + (-1 - e^{i phi})|1>)/2 and the rest in |0>.
"""
from dataclasses import asdict, dataclass, field
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..errors import EngineCapacityError
from ..models.sensor import SensorConfig
from .density import DensityMatrix, SnapshotWriter
from .gates import GateOp, apply_gate
from .lindblad import DEFAULT_TOL, MAX_QUBITS, LindbladSpec, evolve

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class EngineOptions:
    """
    gate_time_s: decoherence-only evolution applied after every gate (0 = instantaneous)
    angle_error: added to the first entangler rotation (negative control)
    snapshot_dir: directory receiving rho dumps after every stage
    snapshot_config, snapshot_seed: header of the dumps (defaults to the generator and options)
    """

    tol: float = DEFAULT_TOL
    gate_time_s: float = 0.0
    correlated_dephasing: bool = False
    angle_error: float = 0.0
    snapshot_dir: Optional[str] = None
    snapshot_config: Optional[dict] = field(default=None, compare=False)
    snapshot_seed: Optional[int] = None

    def engine_settings(self) -> dict:
        return {
            "tol": self.tol,
            "gate_time_s": self.gate_time_s,
            "correlated_dephasing": self.correlated_dephasing,
            "angle_error": self.angle_error,
        }


def entangler(n_qubits: int, angle_error: float = 0.0) -> list[GateOp]:
    gates = [GateOp.ry(0, HALF_PI + angle_error)]
    for t in range(1, n_qubits):
        gates += [GateOp.ry(t, HALF_PI), GateOp.cphase(0, t, "10"), GateOp.ry(t, -HALF_PI)]
    return gates


def projector(n_qubits: int) -> list[GateOp]:
    if n_qubits == 1:
        return [GateOp.ry(0, HALF_PI)]
    gates = []
    for t in range(n_qubits - 1, 1, -1):
        gates += [GateOp.ry(t, HALF_PI), GateOp.cphase(0, t, "10"), GateOp.ry(t, -HALF_PI)]
    gates += [
        GateOp.ry(1, HALF_PI),
        GateOp.cphase(0, 1, "00"),
        GateOp.ry(1, HALF_PI),
        GateOp.ry(0, HALF_PI),
    ]
    return gates


def lindblad_spec(sensor: SensorConfig, flux: float, options: EngineOptions) -> LindbladSpec:
    return LindbladSpec.uniform(
        sensor.n_qubits,
        sensor.detuning(flux),
        sensor.gamma1,
        sensor.gamma_phi,
        correlated_dephasing=options.correlated_dephasing,
    )


class SequenceRunner:
    """Applies gates and free evolution to one register, tracking every stage."""

    def __init__(self, spec: LindbladSpec, options: EngineOptions):
        self.spec = spec
        self.options = options
        config = options.snapshot_config
        if config is None:
            config = {"lindblad": asdict(spec), "engine": options.engine_settings()}
        self.snapshots = SnapshotWriter(options.snapshot_dir, config, options.snapshot_seed)
        self.rho = DensityMatrix.basis(spec.n_qubits, 0)

    def gates(self, gates: Sequence[GateOp], stage: str):
        idle = self.spec.without_field()
        for gate in gates:
            self.rho = apply_gate(self.rho, gate)
            if self.options.gate_time_s > 0:
                self.rho = evolve(self.rho, idle, self.options.gate_time_s, self.options.tol)
        self.snapshots.write(self.rho, stage)

    def wait(self, tau: float):
        self.rho = evolve(self.rho, self.spec, tau, self.options.tol)
        self.snapshots.write(self.rho, "evolved")


def _check_capacity(n_qubits: int):
    if n_qubits > MAX_QUBITS:
        raise EngineCapacityError(
            f"engine supports at most {MAX_QUBITS} qubits, got {n_qubits}"
        )


def run_sensing_sequence(
    sensor: SensorConfig, flux: float, tau: float, options: Optional[EngineOptions] = None
) -> DensityMatrix:
    """Entangler, free evolution for ``tau`` and projector; returns the final state."""
    options = options or EngineOptions()
    _check_capacity(sensor.n_qubits)
    runner = SequenceRunner(lindblad_spec(sensor, flux, options), options)
    runner.gates(entangler(sensor.n_qubits, options.angle_error), "entangled")
    runner.wait(tau)
    runner.gates(projector(sensor.n_qubits), "projected")
    return runner.rho


def prepare_entangled(sensor: SensorConfig, options: Optional[EngineOptions] = None) -> DensityMatrix:
    """State right after the entangler."""
    options = options or EngineOptions()
    _check_capacity(sensor.n_qubits)
    runner = SequenceRunner(lindblad_spec(sensor, sensor.operating_flux, options), options)
    runner.gates(entangler(sensor.n_qubits, options.angle_error), "entangled")
    return runner.rho


def sequence_fig2a(
    sensor: SensorConfig, flux: float, tau: float, options: Optional[EngineOptions] = None
) -> dict[str, float]:
    """Two-qubit sequence; returns the populations P00, P01, P10 and P11."""
    if sensor.n_qubits != 2:
        raise ValueError(f"the two-qubit sequence needs N=2, got N={sensor.n_qubits}")
    probabilities = run_sensing_sequence(sensor, flux, tau, options).probabilities()
    return {f"P{index:02b}": float(p) for index, p in enumerate(probabilities)}


def ghz_projected_pattern(
    sensor: SensorConfig, flux: float, tau: float, options: Optional[EngineOptions] = None
) -> float:
    """Probability of |10...0> after the full sequence (|1> for a single qubit)."""
    rho = run_sensing_sequence(sensor, flux, tau, options)
    return float(rho.probabilities()[2 ** (sensor.n_qubits - 1)])


def engine_pattern(
    sensor: SensorConfig, fluxes: Sequence[float], taus: Sequence[float],
    options: Optional[EngineOptions] = None,
) -> np.ndarray:
    """Engine-computed pattern, entry (i, j) at fluxes[i] and taus[j]."""
    pattern = np.empty((len(fluxes), len(taus)))
    for i, flux in enumerate(fluxes):
        for j, tau in enumerate(taus):
            pattern[i, j] = ghz_projected_pattern(sensor, float(flux), float(tau), options)
    logger.info("engine pattern for %s: %d x %d points", sensor.label, len(fluxes), len(taus))
    return pattern


def single_vs_entangled_trace(
    sensor: SensorConfig, flux: float, taus: Sequence[float], options: Optional[EngineOptions] = None
) -> dict[str, np.ndarray]:
    """P|1> of the single-qubit sensor next to P|10> of the two-qubit sensor over ``taus``."""
    single = sensor.with_qubits(1)
    pair = sensor.with_qubits(2)
    return {
        "tau_s": np.asarray(taus, dtype=float),
        "p1_single": np.array([ghz_projected_pattern(single, flux, t, options) for t in taus]),
        "p10_pair": np.array([ghz_projected_pattern(pair, flux, t, options) for t in taus]),
    }
