"""
Calibration grids shared by all sensors of one experiment.

Grids are cell-centred and anchored at the operating flux. The N-qubit pitch is
the single-qubit pitch divided by 3^(N-1), so every single-qubit point that falls
inside the narrowest window also lies on every finer grid.
"""
import logging
from typing import Sequence

import numpy as np

from ..errors import ConfigError
from ..models.physics import dynamic_range
from ..models.sensor import FluxGrid, SensorConfig

logger = logging.getLogger(__name__)

BASE_POINTS = 2048
REFINEMENT = 3


def grid_point_count(n_qubits: int, base_points: int = BASE_POINTS) -> int:
    """2048, 3072 and 6144 points for N = 1, 2, 3 with the default base."""
    return (base_points * REFINEMENT ** (n_qubits - 1)) // n_qubits


def build_calibration_grid(sensor: SensorConfig, base_points: int = BASE_POINTS) -> FluxGrid:
    """Equidistant candidate fluxes covering the sensor's dynamic range."""
    single_span = dynamic_range(sensor.with_qubits(1))
    pitch = single_span / (base_points * REFINEMENT ** (sensor.n_qubits - 1))
    count = grid_point_count(sensor.n_qubits, base_points)
    if sensor.slope > 0:
        start = sensor.operating_flux + 0.5 * pitch
    else:
        start = sensor.operating_flux - (count - 0.5) * pitch
    grid = FluxGrid(start=start, step=pitch, count=count)
    logger.debug("grid for %s: %d points, pitch %.3e", sensor.label, count, pitch)
    return grid


def _check_compatible(sensors: Sequence[SensorConfig]):
    if not sensors:
        raise ConfigError("at least one sensor is required")
    first = sensors[0]
    for sensor in sensors[1:]:
        if sensor.detuning_model != first.detuning_model or sensor.tau_min != first.tau_min:
            raise ConfigError(
                f"sensor {sensor.label} does not share the detuning model and tau_min of {first.label}"
            )


def common_flux_points(
    sensors: Sequence[SensorConfig], base_points: int = BASE_POINTS
) -> np.ndarray:
    """Single-qubit grid points lying exactly on every sensor's grid, ascending."""
    _check_compatible(sensors)
    grids = [build_calibration_grid(s, base_points) for s in sensors]
    candidates = build_calibration_grid(sensors[0].with_qubits(1), base_points).values()
    keep = np.array([all(g.contains(flux) for g in grids) for flux in candidates], dtype=bool)
    points = candidates[keep]
    logger.info("common sub-lattice: %d fluxes over %d sensors", points.size, len(sensors))
    return points


def choose_test_fluxes(
    sensors: Sequence[SensorConfig], count: int, base_points: int = BASE_POINTS
) -> np.ndarray:
    """``count`` evenly spaced fluxes from the common sub-lattice."""
    points = common_flux_points(sensors, base_points)
    if count < 1:
        raise ConfigError("the number of test fluxes must be at least 1")
    if count > points.size:
        raise ConfigError(
            f"requested {count} test fluxes but only {points.size} lie on every grid"
        )
    indices = np.round(np.linspace(0, points.size - 1, count)).astype(int)
    return points[indices]
