"""
Closed-form sensor physics: flux to detuning, the N-qubit Ramsey pattern and
dynamic-range arithmetic. Everything here is a pure function of immutable inputs.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..errors import DegenerateModelError, FluxRangeError
from .sensor import DetuningModel, FluxGrid, SensorConfig, TransmonDetuning

logger = logging.getLogger(__name__)

# relative slack on window edges so cell-centred grid points never trip the check
_RANGE_SLACK = 1e-9


def detuning(model: DetuningModel, flux, flux_range: Optional[tuple[float, float]] = None):
    """
    Angular detuning (rad/s) of the qubit from the drive at ``flux``.

    Args:
        model: Linear or transmon detuning model
        flux: Flux value(s) in units of the flux quantum
        flux_range: Optional (low, high) window; values outside raise FluxRangeError

    Returns:
        Detuning as a float for scalar input, an array otherwise
    """
    values = np.asarray(flux, dtype=float)
    if flux_range is not None:
        low, high = flux_range
        slack = _RANGE_SLACK * max(high - low, abs(high), 1.0)
        if np.any(values < low - slack) or np.any(values > high + slack):
            outside = values[(values < low - slack) | (values > high + slack)]
            raise FluxRangeError(
                f"flux {float(np.ravel(outside)[0]):.9g} outside dynamic range [{low:.9g}, {high:.9g}]"
            )
    result = model.detuning(values)
    return float(result) if np.ndim(result) == 0 else result


def ramsey_probability(config: SensorConfig, detuning_rad_s, tau):
    """
    Excited-state probability of the N-qubit Ramsey pattern.

    P = 1/2 + 1/2 * exp(-(N*gamma1/2 + N^alpha*gamma_phi) * tau) * cos(N * dw * tau)

    Broadcasts over array inputs and clips to [0, 1].
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("delay time must be non-negative")
    dw = np.asarray(detuning_rad_s, dtype=float)
    envelope = np.exp(-config.decay_rate * tau)
    p = 0.5 + 0.5 * envelope * np.cos(config.n_qubits * dw * tau)
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def dynamic_range(config: SensorConfig) -> float:
    """Flux span pi / (N |k| tau_min) measurable without fringe ambiguity at tau_min."""
    k = config.slope
    if k == 0:
        raise DegenerateModelError("detuning slope is zero at the operating point")
    span = math.pi / (config.n_qubits * abs(k) * config.tau_min)
    if isinstance(config.detuning_model, TransmonDetuning):
        _check_transmon_monotone(config.operating_flux, span, k)
    return span


def _check_transmon_monotone(operating_flux: float, span: float, slope: float):
    low, high = (operating_flux, operating_flux + span) if slope > 0 else (operating_flux - span, operating_flux)
    # the split-junction spectrum turns around at every multiple of half a flux quantum
    first_turn = math.floor(2.0 * low) + 1
    if first_turn / 2.0 < high:
        raise DegenerateModelError(
            f"transmon spectrum is not monotone over [{low:.6g}, {high:.6g}]"
        )


def build_calibration_pattern(
    config: SensorConfig, grid: FluxGrid, taus: Sequence[float]
) -> np.ndarray:
    """
    Calibration pattern: entry (i, j) is the Ramsey probability at grid[i] and taus[j].

    Raises:
        FluxRangeError: if any grid flux leaves the sensor's dynamic range
    """
    fluxes = grid.values()
    dw = config.detuning(fluxes)
    taus = np.asarray(list(taus), dtype=float)
    logger.debug(
        "pattern %s: %d fluxes x %d delays", config.label, fluxes.size, taus.size
    )
    return ramsey_probability(config, dw[:, None], taus[None, :])


def pattern_period(config: SensorConfig, tau: float) -> float:
    """Flux period 2 pi / (N |k| tau) of the pattern along flux for the linear model."""
    return 2.0 * math.pi / (config.n_qubits * abs(config.slope) * tau)
