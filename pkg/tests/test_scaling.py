"""Delay schedules and accuracy scaling of complete estimator runs."""
import numpy as np
import pandas as pd
import pytest

from src.analysis.summary import saturation_step, summarize, summary_exponent
from src.config import load_spec
from src.estimation.grids import build_calibration_grid
from src.estimation.kitaev import PeaConfig, choose_delay, delay_cap, run_task
from src.estimation.posterior import Posterior
from src.models.experiment import ExperimentResult
from src.models.sensor import SensorConfig


def delay_schedule(sensor: SensorConfig, config: PeaConfig) -> pd.DataFrame:
    """Delays of ``max_steps`` decided steps; window decisions fix the width after every step."""
    posterior = Posterior.uniform(build_calibration_grid(sensor))
    delays = []
    for _ in range(config.max_steps):
        delays.append(choose_delay(posterior, sensor, config))
        posterior = posterior.keep_window(0)
    return pd.DataFrame({"l": np.arange(1, config.max_steps + 1), "delay_bar_s": delays})


@pytest.fixture(scope="module")
def paper_spec():
    return load_spec(preset="paper-fig4")


def test_delays_grow_then_saturate(paper_spec):
    steps = {}
    for sensor in paper_spec.sensors:
        if sensor.label.startswith("qec"):
            continue
        schedule = delay_schedule(sensor, paper_spec.pea)
        assert np.all(np.diff(schedule["delay_bar_s"]) >= 0)
        steps[sensor.label] = saturation_step(schedule, delay_cap(sensor, paper_spec.pea))
        if sensor.label == "N1":
            assert sensor.t2_star == pytest.approx(7.46e-6, rel=1e-3)
            assert schedule["delay_bar_s"].iloc[-1] == pytest.approx(sensor.t2_star, rel=0.25)
    assert steps["N1"] > steps["N2_alpha1"] > steps["N3_alpha1"]
    assert steps["N1"] > steps["N2_alpha2"] > steps["N3_alpha2"]
    assert (steps["N1"], steps["N2_alpha1"], steps["N3_alpha1"]) == (10, 9, 8)
    assert (steps["N2_alpha2"], steps["N3_alpha2"]) == (8, 7)


def test_uncapped_schedule_doubles():
    ideal = SensorConfig(gamma1=0.0, gamma_phi=0.0, label="ideal")
    schedule = delay_schedule(ideal, PeaConfig(cap_policy="none"))
    expected = [ideal.tau_min * 2 ** i for i in range(10)]
    assert schedule["delay_bar_s"].tolist() == pytest.approx(expected)
    assert saturation_step(schedule, delay_cap(ideal, PeaConfig(cap_policy="none"))) is None


def test_early_steps_scale_near_heisenberg():
    sensor = SensorConfig(gamma1=0.0, gamma_phi=0.0, label="ideal")
    grid = build_calibration_grid(sensor)
    config = PeaConfig(max_steps=4, cap_policy="none")
    indices = [101, 347, 612, 877, 1144, 1430, 1702, 1951]
    rows = []
    for j, index in enumerate(indices):
        for k in range(4):
            rows += run_task(sensor, config, float(grid.values()[index]), j, k, seed=13, grid=grid)
    result = ExperimentResult.from_rows(rows, label="ideal")

    assert result.undecided_fraction() == 0.0
    shots = result.records["n_l"]
    assert shots.max() <= 20 * shots.median()

    summary = summarize(result, bootstrap=0)
    assert np.all(np.diff(summary["delta_phi_over_phi0"]) < 0)
    # the cumulative time sum_i tau_i n_i bends the fit away from -1 over only four steps
    assert -1.3 <= summary_exponent(summary, [1, 2, 3, 4]) <= -0.6
