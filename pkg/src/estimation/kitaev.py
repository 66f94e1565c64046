"""
Stepped Kitaev phase estimation of an external flux.

Every step picks the longest delay whose fringe stays unambiguous over the
surviving candidates, then measures shot by shot until a contiguous half of the
candidate interval holds posterior mass >= 1 - epsilon. Everything outside it is
discarded. Under the "window" rule the kept half may sit anywhere in the interval;
the "median" rule only ever keeps the lower or the upper half.
"""
from dataclasses import dataclass, field, asdict
import logging
import math
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..errors import ConfigError
from ..models.physics import ramsey_probability
from ..models.sensor import FluxGrid, SensorConfig
from .grids import build_calibration_grid
from .posterior import LOWER, NO_DECISION, UPPER, Posterior, window_masses
from .readout import ReadoutModel, RngStream, mixture_loglikelihood

logger = logging.getLogger(__name__)

CAP_POLICIES = ("coherence", "sensitivity", "none")
DECISION_RULES = ("window", "median")

# upper bound on shots x candidates held in memory per block
_BLOCK_ELEMENTS = 2 ** 21


@dataclass(frozen=True)
class PeaConfig:
    """Estimator settings."""

    epsilon: float = 1e-4
    max_steps: int = 10
    shot_cap: int = 100_000
    cap_policy: str = "coherence"
    decision_rule: str = "window"
    readout: ReadoutModel = field(default_factory=ReadoutModel)
    first_block: int = 64
    max_block: int = 4096

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ConfigError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        if self.shot_cap < 1:
            raise ConfigError("shot_cap must be at least 1")
        if self.cap_policy not in CAP_POLICIES:
            raise ConfigError(
                f"cap_policy must be one of {', '.join(CAP_POLICIES)}, got '{self.cap_policy}'"
            )
        if self.decision_rule not in DECISION_RULES:
            raise ConfigError(
                f"decision_rule must be one of {', '.join(DECISION_RULES)}, got '{self.decision_rule}'"
            )
        if self.first_block < 1 or self.max_block < self.first_block:
            raise ConfigError("shot blocks must satisfy 1 <= first_block <= max_block")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["readout"] = self.readout.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PeaConfig":
        data = dict(data)
        if "readout" in data:
            data["readout"] = ReadoutModel.from_dict(data["readout"])
        return cls(**data)


@dataclass(frozen=True)
class StepRecord:
    """
    Outcome of one step.

    ``cand_lo``/``cand_hi`` reference the surviving candidate index range on the
    sensor's calibration grid.
    """

    l: int
    tau_l_s: float
    n_l: int
    half: str
    phi_hat: float
    decided: bool
    cand_lo: int
    cand_hi: int

    def to_dict(self) -> dict:
        return asdict(self)


def delay_cap(sensor: SensorConfig, config: PeaConfig) -> float:
    if config.cap_policy == "none":
        return math.inf
    if config.cap_policy == "sensitivity":
        # maximizes tau * exp(-2 tau / T2*), the information per unit accumulation time
        return sensor.t2_star / 2.0
    return sensor.t2_star


def choose_delay(posterior: Posterior, sensor: SensorConfig, config: PeaConfig) -> float:
    """Longest unambiguous delay pi / (N |k| W), capped by the policy and floored at tau_min."""
    tau = math.pi / (sensor.n_qubits * abs(sensor.slope) * posterior.width)
    tau = min(tau, delay_cap(sensor, config))
    return max(sensor.tau_min, tau)


def _block_sizes(config: PeaConfig, candidates: int):
    limit = max(1, min(config.max_block, _BLOCK_ELEMENTS // candidates))
    size = min(config.first_block, limit)
    while True:
        yield size
        size = min(2 * size, limit)


def _median_decision(posterior: Posterior, cumulative: np.ndarray, total: np.ndarray, config: PeaConfig):
    split = posterior.split
    threshold = math.log1p(-config.epsilon)
    lower = logsumexp(cumulative[:, :split], axis=1) - total
    upper = logsumexp(cumulative[:, split:], axis=1) - total
    hit = (lower >= threshold) | (upper >= threshold)
    if not hit.any():
        return None
    first = int(np.argmax(hit))
    half = LOWER if lower[first] >= threshold else UPPER
    final = Posterior.from_log_weights(posterior.grid, posterior.lo, cumulative[first])
    return first, half, final.keep(half)


def _window_decision(posterior: Posterior, cumulative: np.ndarray, total: np.ndarray, config: PeaConfig):
    masses = window_masses(cumulative - total[:, None], posterior.window_size)
    hit = masses.max(axis=1) >= 1.0 - config.epsilon
    if not hit.any():
        return None
    first = int(np.argmax(hit))
    start = int(np.argmax(masses[first]))
    final = Posterior.from_log_weights(posterior.grid, posterior.lo, cumulative[first])
    return first, posterior.window_label(start), final.keep_window(start)


_DECISIONS = {"median": _median_decision, "window": _window_decision}


def run_step(
    posterior: Posterior,
    true_flux: float,
    tau: float,
    sensor: SensorConfig,
    config: PeaConfig,
    rng: RngStream,
    l: int = 1,
    previous_estimate: Optional[float] = None,
) -> tuple[Posterior, StepRecord]:
    """
    Measure at delay ``tau`` until a half of the candidates wins, or the shot cap.

    Returns:
        The updated posterior and the step record. An undecided step keeps every
        candidate together with the accumulated evidence.
    """
    previous_estimate = posterior.mean() if previous_estimate is None else previous_estimate

    if posterior.count < 2:
        record = StepRecord(l, tau, 0, NO_DECISION, previous_estimate, False, posterior.lo, posterior.hi)
        return posterior, record

    p1_true = ramsey_probability(sensor, sensor.detuning(true_flux), tau)
    p1_candidates = ramsey_probability(sensor, sensor.detuning(posterior.candidates()), tau)
    decide = _DECISIONS[config.decision_rule]

    current = posterior.log_weights
    shots = 0
    for size in _block_sizes(config, posterior.count):
        size = min(size, config.shot_cap - shots)
        if size <= 0:
            break
        outcomes = config.readout.sample(p1_true, rng, size)
        log0, log1 = config.readout.component_logpdf(outcomes)
        per_shot = mixture_loglikelihood(log0[:, None], log1[:, None], p1_candidates[None, :])
        cumulative = current + np.cumsum(per_shot, axis=0)
        total = logsumexp(cumulative, axis=1)
        decision = decide(posterior, cumulative, total, config)
        if decision is not None:
            first, half, survivors = decision
            shots += first + 1
            record = StepRecord(
                l, tau, shots, half, survivors.mean(), True, survivors.lo, survivors.hi
            )
            logger.debug("step %d: tau=%.3e s, %d shots, kept %s half", l, tau, shots, half)
            return survivors, record
        shots += size
        current = cumulative[-1] - total[-1]

    logger.debug("step %d: no decision after %d shots", l, shots)
    updated = Posterior.from_log_weights(posterior.grid, posterior.lo, current)
    record = StepRecord(l, tau, shots, NO_DECISION, previous_estimate, False, updated.lo, updated.hi)
    return updated, record


def run_algorithm(
    true_flux: float,
    sensor: SensorConfig,
    config: PeaConfig,
    rng: RngStream,
    grid: Optional[FluxGrid] = None,
) -> list[StepRecord]:
    """Run ``max_steps`` steps from a uniform prior over the calibration grid."""
    grid = build_calibration_grid(sensor) if grid is None else grid
    posterior = Posterior.uniform(grid)
    estimate = posterior.mean()
    records = []
    for l in range(1, config.max_steps + 1):
        tau = choose_delay(posterior, sensor, config)
        posterior, record = run_step(
            posterior, true_flux, tau, sensor, config, rng, l=l, previous_estimate=estimate
        )
        estimate = record.phi_hat
        records.append(record)
    undecided = sum(not r.decided for r in records)
    if undecided:
        logger.warning(
            "%s: %d of %d steps undecided at flux %.9g", sensor.label, undecided, len(records), true_flux
        )
    return records


def run_task(
    sensor: SensorConfig,
    config: PeaConfig,
    true_flux: float,
    j: int,
    k: int,
    seed: int,
    grid: Optional[FluxGrid] = None,
) -> list[dict]:
    """One (flux j, repetition k) task as record rows for the results table."""
    rng = RngStream(seed, j, k)
    records = run_algorithm(true_flux, sensor, config, rng, grid=grid)
    return [{"j": j, "flux_true": true_flux, "k": k, **r.to_dict()} for r in records]
