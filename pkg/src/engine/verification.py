"""
Cross-checks between the first-principles engine and the closed-form pattern.

Each check returns a CheckResult with the measured deviation and its threshold;
``run_verification`` collects them into a report the CLI prints.
"""
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Optional

import mpmath
import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from ..models.physics import ramsey_probability
from ..models.sensor import SensorConfig
from ..estimation.grids import build_calibration_grid
from ..estimation.readout import ReadoutModel, likelihood_normalization
from .density import HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL, DensityMatrix
from .gates import GateOp, UNITARITY_TOL, apply_gate, unitarity_error
from .lindblad import LindbladSpec, evolve
from .sequences import EngineOptions, engine_pattern, ghz_projected_pattern, prepare_entangled

logger = logging.getLogger(__name__)

# detuning used for fringe fits
FIT_DETUNING = 2 * math.pi * 2e6
# decimal digits of the reference closed-form evaluation
REFERENCE_DPS = 40


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: CheckResult):
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(level, "%s: measured %.3e (threshold %.3e)", check.name, check.measured, check.threshold)
        self.checks.append(check)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.to_dict() for c in self.checks])


def reference_ramsey(n: int, gamma1: float, gamma_phi: float, alpha: float, dw: float, tau: float) -> float:
    """Closed-form pattern evaluated with REFERENCE_DPS digits, rounded to the nearest double."""
    with mpmath.workdps(REFERENCE_DPS):
        dw, tau = mpmath.mpf(dw), mpmath.mpf(tau)
        rate = n * mpmath.mpf(gamma1) / 2 + mpmath.power(n, mpmath.mpf(alpha)) * mpmath.mpf(gamma_phi)
        return float(mpmath.mpf(1) / 2 + mpmath.exp(-rate * tau) * mpmath.cos(n * dw * tau) / 2)


def check_closed_form(samples: int = 10_000, seed: int = 0) -> CheckResult:
    """Vectorized double-precision pattern against the multiprecision reference on random inputs."""
    rng = np.random.default_rng(seed)
    configs = max(1, samples // 100)
    per_config = max(1, samples // configs)
    worst = 0.0
    for _ in range(configs):
        config = SensorConfig(
            n_qubits=int(rng.integers(1, 6)),
            gamma1=float(rng.uniform(0, 1e6)),
            gamma_phi=float(rng.uniform(0, 1e6)),
            alpha=float(rng.uniform(1, 2)),
        )
        dws = rng.uniform(-2 * math.pi * 1e7, 2 * math.pi * 1e7, per_config)
        taus = rng.uniform(0, 1e-5, per_config)
        fast = ramsey_probability(config, dws, taus)
        slow = np.array([
            reference_ramsey(config.n_qubits, config.gamma1, config.gamma_phi, config.alpha, dw, tau)
            for dw, tau in zip(dws, taus)
        ])
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    return CheckResult("closed_form", worst <= 1e-12, worst, 1e-12, f"{configs * per_config} inputs")


def check_unitarity(max_qubits: int = 3) -> CheckResult:
    worst = 0.0
    for n in range(1, max_qubits + 1):
        gates = [GateOp.rotation(q, axis, angle)
                 for q in range(n) for axis in "xyz" for angle in (0.3, math.pi / 2, -2.1)]
        gates += [GateOp.cphase(a, b, p) for a in range(n) for b in range(n) if a != b
                  for p in ("00", "01", "10", "11")]
        worst = max(worst, max(unitarity_error(g.unitary(n)) for g in gates))
    return CheckResult("gate_unitarity", worst <= UNITARITY_TOL, worst, UNITARITY_TOL)


def check_entangler(sensor: SensorConfig, options: EngineOptions) -> CheckResult:
    """Fidelity of the entangler output with the GHZ state up to local phases (rates 0)."""
    ideal = sensor.noiseless()
    fidelity = prepare_entangled(ideal, replace(options, gate_time_s=0.0)).ghz_fidelity()
    infidelity = 1.0 - fidelity
    return CheckResult(
        f"entangler_fidelity_N{sensor.n_qubits}", infidelity <= 1e-9, infidelity, 1e-9,
        f"fidelity {fidelity:.12f}",
    )


def equivalence_axes(sensor: SensorConfig, n_flux: int, n_tau: int, tau_max: float):
    values = build_calibration_grid(sensor).values()
    indices = np.round(np.linspace(0, values.size - 1, n_flux)).astype(int)
    return values[indices], np.linspace(0.0, tau_max, n_tau)


def check_equivalence(
    sensor: SensorConfig, options: EngineOptions, n_flux: int = 64, n_tau: int = 64, tau_max: float = 1e-6
) -> CheckResult:
    """Engine pattern against the closed form with all rates zero."""
    ideal = sensor.noiseless()
    fluxes, taus = equivalence_axes(ideal, n_flux, n_tau, tau_max)
    engine = engine_pattern(ideal, fluxes, taus, options)
    closed = ramsey_probability(ideal, ideal.detuning(fluxes)[:, None], taus[None, :])
    worst = float(np.max(np.abs(engine - closed)))
    return CheckResult(
        f"equivalence_N{sensor.n_qubits}", worst <= 1e-6, worst, 1e-6, f"{n_flux}x{n_tau} grid"
    )


def fringe_model(t, c0, c1, c2, amplitude, gamma, omega, phase):
    return c0 + c1 * t + c2 * t ** 2 + amplitude * np.exp(-gamma * t) * np.cos(omega * t + phase)


def fit_fringe(taus: np.ndarray, values: np.ndarray, omega_guess: float, gamma_guess: float) -> dict:
    """
    Fit a damped cosine over a quadratic baseline. Time is rescaled to microseconds
    for conditioning; the returned rates are in 1/s.
    """
    t = taus * 1e6
    p0 = [0.5, 0.0, 0.0, 0.5, gamma_guess * 1e-6, omega_guess * 1e-6, 0.0]
    params, _ = curve_fit(fringe_model, t, values, p0=p0, maxfev=20_000)
    return {
        "omega": abs(params[5]) * 1e6,
        "gamma": params[4] * 1e6,
        "amplitude": params[3],
    }


def fit_flux(sensor: SensorConfig, detuning: float = FIT_DETUNING) -> float:
    """Flux inside the sensor window whose detuning is about ``detuning``."""
    low, high = sensor.flux_window()
    flux = sensor.operating_flux + math.copysign(detuning / abs(sensor.slope), sensor.slope)
    return min(max(flux, low), high)


def envelope_fit(
    sensor: SensorConfig, options: EngineOptions, points: int = 241
) -> tuple[dict, float, float]:
    """
    Fit the engine pattern over [0, T2*] and return the fit with the expected
    angular frequency N*dw and envelope rate.
    """
    flux = fit_flux(sensor)
    dw = float(sensor.detuning(flux))
    n = sensor.n_qubits
    exponent = 2.0 if options.correlated_dephasing else 1.0
    expected_rate = n * sensor.gamma1 / 2.0 + n ** exponent * sensor.gamma_phi
    taus = np.linspace(0.0, 1.0 / expected_rate, points)
    values = np.array([ghz_projected_pattern(sensor, flux, t, options) for t in taus])
    fit = fit_fringe(taus, values, n * abs(dw), expected_rate)
    return fit, n * abs(dw), expected_rate


def check_envelope(sensor: SensorConfig, options: EngineOptions) -> list[CheckResult]:
    """Fringe frequency within 0.1% and envelope rate within 10% of the closed form."""
    fit, omega, rate = envelope_fit(sensor, options)
    tag = f"N{sensor.n_qubits}" + ("_correlated" if options.correlated_dephasing else "")
    freq_error = abs(fit["omega"] - omega) / omega
    rate_error = abs(fit["gamma"] - rate) / rate
    return [
        CheckResult(f"fringe_frequency_{tag}", freq_error <= 1e-3, freq_error, 1e-3,
                    f"fit {fit['omega']:.6e} rad/s vs {omega:.6e}"),
        CheckResult(f"envelope_rate_{tag}", rate_error <= 0.1, rate_error, 0.1,
                    f"fit {fit['gamma']:.4e} 1/s vs {rate:.4e}"),
    ]


def _random_gate(rng: np.random.Generator, n: int) -> GateOp:
    if n > 1 and rng.random() < 0.4:
        first, second = rng.choice(n, size=2, replace=False)
        return GateOp.cphase(int(first), int(second), str(rng.choice(["00", "01", "10", "11"])))
    return GateOp.rotation(int(rng.integers(n)), str(rng.choice(list("xyz"))), float(rng.uniform(-math.pi, math.pi)))


def check_cptp(sequences: int = 1000, seed: int = 0, max_qubits: int = 3) -> list[CheckResult]:
    """Random gate/evolve sequences keep trace, Hermiticity and positivity."""
    rng = np.random.default_rng(seed)
    worst = {"trace": 0.0, "hermiticity": 0.0, "min_eigenvalue": 0.0}
    for _ in range(sequences):
        n = int(rng.integers(1, max_qubits + 1))
        rho = DensityMatrix.basis(n, int(rng.integers(2 ** n)))
        spec = LindbladSpec(
            detunings=rng.uniform(-2e7, 2e7, n),
            gamma1=float(rng.uniform(0, 1e6)),
            gamma_phi=float(rng.uniform(0, 1e6)),
            correlated_dephasing=bool(rng.random() < 0.5),
        )
        for _ in range(int(rng.integers(2, 6))):
            if rng.random() < 0.5:
                rho = apply_gate(rho, _random_gate(rng, n))
            else:
                rho = evolve(rho, spec, float(rng.uniform(0, 2e-6)), tol=1e-11)
            d = rho.deviations()
            worst["trace"] = max(worst["trace"], d["trace"])
            worst["hermiticity"] = max(worst["hermiticity"], d["hermiticity"])
            worst["min_eigenvalue"] = min(worst["min_eigenvalue"], d["min_eigenvalue"])
    return [
        CheckResult("cptp_trace", worst["trace"] <= TRACE_TOL, worst["trace"], TRACE_TOL),
        CheckResult("cptp_hermiticity", worst["hermiticity"] <= HERMITIAN_TOL, worst["hermiticity"], HERMITIAN_TOL),
        CheckResult(
            "cptp_positivity", worst["min_eigenvalue"] >= -POSITIVITY_TOL,
            -worst["min_eigenvalue"], POSITIVITY_TOL, f"{sequences} sequences",
        ),
    ]


def check_readout_normalization(readout: ReadoutModel) -> CheckResult:
    worst = max(abs(likelihood_normalization(p, readout) - 1.0) for p in (0.0, 0.3, 0.5, 1.0))
    return CheckResult("readout_normalization", worst <= 1e-6, worst, 1e-6)


def run_verification(
    sensor: SensorConfig,
    options: Optional[EngineOptions] = None,
    readout: Optional[ReadoutModel] = None,
    n_flux: int = 64,
    n_tau: int = 64,
    cptp_sequences: int = 1000,
    seed: int = 0,
) -> VerificationReport:
    """
    Full suite: closed form, unitarity, entangler fidelity, rates-0 equivalence for
    N = 1, 2, fringe fits with independent and correlated dephasing, CPTP sequences
    and readout normalization.
    """
    options = options or EngineOptions()
    readout = readout or ReadoutModel()
    report = VerificationReport()
    logger.info("verification started for %s", sensor.label)

    report.add(check_closed_form(seed=seed))
    report.add(check_unitarity())
    report.add(check_entangler(sensor.with_qubits(2), options))
    for n in (1, 2):
        report.add(check_equivalence(sensor.with_qubits(n), replace(options, angle_error=0.0), n_flux, n_tau))
    pair = sensor.with_qubits(2)
    if not pair.is_noiseless:
        clean = replace(options, angle_error=0.0, gate_time_s=0.0)
        for check in check_envelope(pair, replace(clean, correlated_dephasing=False)):
            report.add(check)
        for check in check_envelope(replace(pair, alpha=2.0), replace(clean, correlated_dephasing=True)):
            report.add(check)
    for check in check_cptp(cptp_sequences, seed=seed):
        report.add(check)
    report.add(check_readout_normalization(readout))
    logger.info("verification finished: %s", "PASS" if report.passed else "FAIL")
    return report
