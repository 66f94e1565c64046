"""
Aggregation of step records into accuracy-versus-time summaries.

Averaging follows the experiment's index structure: first over repetitions k,
then over test fluxes j. Fluxes are in units of the flux quantum, so
delta_phi_over_phi0 is the raw flux error.
"""
import logging
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import IndexRangeError, ScalingFitError, UndefinedVarianceError
from ..models.experiment import ExperimentResult

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "l", "tau_bar_s", "n_bar", "delta_phi_over_phi0", "slope_local",
    "ci_low_bootstrap", "ci_high_bootstrap", "delay_bar_s", "undecided_fraction",
]

# reference exponents of accuracy against phase accumulation time
SQL_EXPONENT = -0.5
HL_EXPONENT = -1.0


def _with_accumulation(records: pd.DataFrame) -> pd.DataFrame:
    records = records.sort_values(["j", "k", "l"])
    product = records["tau_l_s"] * records["n_l"]
    return records.assign(accumulation_s=product.groupby([records["j"], records["k"]]).cumsum())


def phase_accumulation_time(result: ExperimentResult, j: int, k: int, l: int) -> float:
    """Total phase accumulation time sum_{i<=l} tau_i * n_i of task (j, k)."""
    rows = result.records[(result.records["j"] == j) & (result.records["k"] == k)]
    if rows.empty or not 1 <= l <= rows["l"].max():
        raise IndexRangeError(f"no records for j={j}, k={k}, l={l}")
    rows = rows[rows["l"] <= l]
    return float((rows["tau_l_s"] * rows["n_l"]).sum())


def _two_stage_mean(step: pd.DataFrame, column: str) -> float:
    return float(step.groupby("j")[column].mean().mean())


def averaged_phase_time(result: ExperimentResult, l: int) -> float:
    """Phase accumulation time at step l averaged over k, then over j."""
    records = _with_accumulation(result.records)
    return _two_stage_mean(records[records["l"] == l], "accumulation_s")


def averaged_delay(result: ExperimentResult, l: int) -> float:
    """Delay of step l averaged over k, then over j."""
    return _two_stage_mean(result.step(l), "tau_l_s")


def _accuracy(step: pd.DataFrame, repetitions: int) -> float:
    if repetitions < 2:
        raise UndefinedVarianceError(f"need at least two repetitions per flux, got {repetitions}")
    squared = (step["phi_hat"] - step["flux_true"]) ** 2
    per_flux = squared.groupby(step["j"]).sum() / (repetitions - 1)
    return float(np.sqrt(per_flux.sum() / per_flux.size))


def averaged_accuracy(result: ExperimentResult, l: int) -> float:
    """
    sqrt( (1/F) sum_j (1/(M-1)) sum_k (phi_hat_jkl - phi_j)^2 )

    Raises:
        UndefinedVarianceError: fewer than two repetitions
    """
    return _accuracy(result.step(l), result.n_repetitions)


def scaling_exponent(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(accuracy) against log(time)."""
    points = list(points)
    if len(points) < 2:
        raise ScalingFitError("a scaling fit needs at least two points")
    times = np.array([p[0] for p in points], dtype=float)
    errors = np.array([p[1] for p in points], dtype=float)
    if np.any(times <= 0) or np.any(errors <= 0):
        raise ScalingFitError("scaling fit points must be positive")
    if np.ptp(times) == 0:
        raise ScalingFitError("scaling fit needs distinct times")
    slope, _ = np.polyfit(np.log(times), np.log(errors), 1)
    return float(slope)


def bootstrap_accuracy(
    result: ExperimentResult, l: int, resamples: int = 200, seed: int = 0, level: float = 0.95
) -> tuple[float, float]:
    """Percentile interval of the step-l accuracy under resampling of test fluxes."""
    step = result.step(l)
    fluxes = np.sort(step["j"].unique())
    if resamples < 1 or fluxes.size < 2:
        return float("nan"), float("nan")
    grouped = {j: rows for j, rows in step.groupby("j")}
    repetitions = result.n_repetitions
    rng = np.random.default_rng(seed)
    values = np.empty(resamples)
    for b in range(resamples):
        chosen = rng.choice(fluxes, size=fluxes.size, replace=True)
        sample = pd.concat(
            [grouped[j].assign(j=position) for position, j in enumerate(chosen)], ignore_index=True
        )
        values[b] = _accuracy(sample, repetitions)
    tail = 50.0 * (1.0 - level)
    low, high = np.percentile(values, [tail, 100.0 - tail])
    return float(low), float(high)


def _local_slopes(times: np.ndarray, errors: np.ndarray) -> np.ndarray:
    slopes = np.full(times.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t = np.log(times)
        log_e = np.log(errors)
    for i in range(times.size):
        a, b = (i - 1, i) if i > 0 else (0, 1)
        if b >= times.size:
            break
        if np.isfinite([log_t[a], log_t[b], log_e[a], log_e[b]]).all() and log_t[b] != log_t[a]:
            slopes[i] = (log_e[b] - log_e[a]) / (log_t[b] - log_t[a])
    return slopes


def summarize(result: ExperimentResult, bootstrap: int = 200, seed: int = 0) -> pd.DataFrame:
    """Per-step summary table of one sensor."""
    rows = []
    for l in range(1, result.n_steps + 1):
        step = result.step(l)
        low, high = bootstrap_accuracy(result, l, bootstrap, seed)
        rows.append({
            "l": l,
            "tau_bar_s": averaged_phase_time(result, l),
            "n_bar": _two_stage_mean(step, "n_l"),
            "delta_phi_over_phi0": averaged_accuracy(result, l),
            "ci_low_bootstrap": low,
            "ci_high_bootstrap": high,
            "delay_bar_s": averaged_delay(result, l),
            "undecided_fraction": float((~step["decided"].astype(bool)).mean()),
        })
    summary = pd.DataFrame(rows)
    summary["slope_local"] = _local_slopes(
        summary["tau_bar_s"].to_numpy(), summary["delta_phi_over_phi0"].to_numpy()
    )
    logger.info("summarized %s: %d steps", result.label or "result", len(summary))
    return summary[SUMMARY_COLUMNS]


def summary_exponent(summary: pd.DataFrame, steps: Optional[Sequence[int]] = None) -> float:
    """Scaling exponent over the chosen steps (all steps by default)."""
    rows = summary if steps is None else summary[summary["l"].isin(list(steps))]
    return scaling_exponent(list(zip(rows["tau_bar_s"], rows["delta_phi_over_phi0"])))


def nearest_limit(exponent: float) -> str:
    """"HL" or "SQL", whichever reference exponent lies closer; "n/a" for NaN."""
    if not np.isfinite(exponent):
        return "n/a"
    return "HL" if abs(exponent - HL_EXPONENT) <= abs(exponent - SQL_EXPONENT) else "SQL"


def accuracy_at(summary: pd.DataFrame, tau_bar: float) -> float:
    """Accuracy interpolated log-log at phase accumulation time ``tau_bar`` (NaN outside)."""
    rows = summary[(summary["tau_bar_s"] > 0) & (summary["delta_phi_over_phi0"] > 0)]
    rows = rows.sort_values("tau_bar_s")
    if len(rows) < 2 or tau_bar <= 0:
        return float("nan")
    log_t = np.log(rows["tau_bar_s"].to_numpy())
    log_e = np.log(rows["delta_phi_over_phi0"].to_numpy())
    value = np.interp(np.log(tau_bar), log_t, log_e, left=np.nan, right=np.nan)
    return float(np.exp(value))


def entanglement_advantage(summaries: Mapping[str, pd.DataFrame], reference: str) -> pd.DataFrame:
    """
    Accuracy of every sensor at the reference sensor's phase accumulation times.

    Columns: l, tau_bar_s and one accuracy column per sensor label.
    """
    if reference not in summaries:
        raise KeyError(f"unknown reference sensor '{reference}'")
    base = summaries[reference]
    table = pd.DataFrame({"l": base["l"], "tau_bar_s": base["tau_bar_s"]})
    for label, summary in summaries.items():
        table[label] = [accuracy_at(summary, t) for t in table["tau_bar_s"]]
    return table


def saturation_step(summary: pd.DataFrame, cap: float, tolerance: float = 0.25) -> Optional[int]:
    """First step whose averaged delay is within ``tolerance`` of ``cap``."""
    if not np.isfinite(cap):
        return None
    reached = summary[summary["delay_bar_s"] >= (1.0 - tolerance) * cap]
    return int(reached["l"].iloc[0]) if len(reached) else None
