import math
from dataclasses import replace

import numpy as np
import pytest

from src.errors import ConfigError
from src.estimation.grids import (
    build_calibration_grid,
    choose_test_fluxes,
    common_flux_points,
    grid_point_count,
)
from src.estimation.kitaev import (
    PeaConfig,
    choose_delay,
    delay_cap,
    run_algorithm,
    run_step,
    run_task,
)
from src.estimation.posterior import LOWER, MIDDLE, NO_DECISION, UPPER, Posterior
from src.estimation.readout import ReadoutModel, RngStream
from src.models.physics import dynamic_range
from src.models.sensor import FluxGrid, SensorConfig

SMALL_BASE = 64


def test_grid_point_counts():
    assert [grid_point_count(n) for n in (1, 2, 3)] == [2048, 3072, 6144]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_grid_covers_dynamic_range(sensor, n):
    config = sensor.with_qubits(n)
    grid = build_calibration_grid(config, SMALL_BASE)
    low, high = config.flux_window()
    assert grid.start == pytest.approx(low + grid.step / 2)
    assert grid.span == pytest.approx(dynamic_range(config), rel=0.01)
    assert grid.values()[-1] < high


def test_grid_mirrors_for_negative_slope():
    from src.models.sensor import LinearDetuning

    config = SensorConfig(detuning_model=LinearDetuning(slope=-2 * math.pi * 2.5e9, operating_flux=0.3))
    grid = build_calibration_grid(config, SMALL_BASE)
    assert grid.values()[-1] == pytest.approx(0.3 - grid.step / 2)


def test_common_sub_lattice(sensor):
    sensors = [sensor.with_qubits(n) for n in (1, 2, 3)]
    points = common_flux_points(sensors)
    assert points.size == 683
    for config in sensors:
        grid = build_calibration_grid(config)
        assert all(grid.contains(flux) for flux in points[::50])


def test_test_fluxes_are_spread_over_sub_lattice(sensor):
    sensors = [sensor, sensor.with_qubits(2)]
    fluxes = choose_test_fluxes(sensors, 5, SMALL_BASE)
    points = common_flux_points(sensors, SMALL_BASE)
    assert fluxes.size == 5
    assert fluxes[0] == points[0] and fluxes[-1] == points[-1]
    assert np.all(np.diff(fluxes) > 0)
    with pytest.raises(ConfigError):
        choose_test_fluxes(sensors, points.size + 1, SMALL_BASE)


def test_incompatible_sensors_are_rejected(sensor):
    with pytest.raises(ConfigError):
        common_flux_points([sensor, replace(sensor, tau_min=40e-9, label="slow")], SMALL_BASE)


def test_posterior_halving():
    grid = FluxGrid(start=0.5, step=1.0, count=8)
    posterior = Posterior.uniform(grid)
    assert posterior.half_masses() == pytest.approx((0.5, 0.5))
    assert posterior.mean() == pytest.approx(4.0)
    lower = posterior.keep(LOWER)
    upper = posterior.keep(UPPER)
    assert (lower.lo, lower.hi) == (0, 4)
    assert (upper.lo, upper.hi) == (4, 8)
    assert lower.bounds() == pytest.approx((0.0, 4.0))
    assert upper.contains(6.2) and not upper.contains(3.0)


def test_posterior_normalizes_weights():
    grid = FluxGrid(start=0.0, step=1.0, count=4)
    posterior = Posterior.from_log_weights(grid, 0, np.log([1.0, 1.0, 2.0, 4.0]))
    assert posterior.weights().sum() == pytest.approx(1.0)
    assert posterior.half_masses() == pytest.approx((0.25, 0.75))


def test_posterior_windows():
    grid = FluxGrid(start=0.0, step=1.0, count=4)
    posterior = Posterior.from_log_weights(grid, 0, np.log([1.0, 1.0, 2.0, 4.0]))
    assert posterior.window_size == 2
    assert posterior.window_masses() == pytest.approx([0.25, 0.375, 0.75])
    assert [posterior.window_label(s) for s in range(3)] == [LOWER, MIDDLE, UPPER]
    middle = posterior.keep_window(1)
    assert (middle.lo, middle.hi) == (1, 3)
    assert middle.weights() == pytest.approx([1 / 3, 2 / 3])
    with pytest.raises(ValueError):
        posterior.keep_window(3)
    odd = Posterior.uniform(FluxGrid(start=0.0, step=1.0, count=5))
    assert odd.window_size == 3
    assert odd.window_masses() == pytest.approx([0.6, 0.6, 0.6])


def test_first_delay_is_tau_min(sensor):
    grid = build_calibration_grid(sensor, SMALL_BASE)
    assert choose_delay(Posterior.uniform(grid), sensor, PeaConfig()) == pytest.approx(sensor.tau_min)


def test_delay_cap_policies(sensor):
    assert delay_cap(sensor, PeaConfig()) == pytest.approx(sensor.t2_star)
    assert delay_cap(sensor, PeaConfig(cap_policy="sensitivity")) == pytest.approx(sensor.t2_star / 2)
    assert math.isinf(delay_cap(sensor, PeaConfig(cap_policy="none")))


def test_delay_saturates_at_coherence_time(sensor):
    grid = build_calibration_grid(sensor)
    narrow = Posterior.uniform(grid, lo=10, hi=11)
    assert choose_delay(narrow, sensor, PeaConfig()) == pytest.approx(sensor.t2_star)


def test_noiseless_run_converges_to_true_flux(ideal_sensor, sharp_readout):
    grid = build_calibration_grid(ideal_sensor, SMALL_BASE)
    true_flux = float(grid.values()[20])
    config = PeaConfig(max_steps=6, readout=sharp_readout, decision_rule="median")
    records = run_algorithm(true_flux, ideal_sensor, config, RngStream(11), grid=grid)
    assert len(records) == 6
    assert all(r.decided for r in records)
    assert [r.tau_l_s for r in records] == pytest.approx([ideal_sensor.tau_min * 2 ** i for i in range(6)])
    final = records[-1]
    assert final.cand_hi - final.cand_lo == 1
    assert final.cand_lo == 20
    assert final.phi_hat == pytest.approx(true_flux)


def test_single_candidate_steps_are_undecided(ideal_sensor, sharp_readout):
    grid = build_calibration_grid(ideal_sensor, SMALL_BASE)
    true_flux = float(grid.values()[20])
    config = PeaConfig(max_steps=8, readout=sharp_readout, decision_rule="median")
    records = run_algorithm(true_flux, ideal_sensor, config, RngStream(11), grid=grid)
    assert len(records) == 8
    for record in records[6:]:
        assert not record.decided
        assert record.n_l == 0
        assert record.half == NO_DECISION
        assert record.phi_hat == pytest.approx(true_flux)


@pytest.mark.parametrize("rule", ["window", "median"])
def test_zero_delay_is_uninformative(sensor, rule):
    grid = build_calibration_grid(sensor, SMALL_BASE)
    posterior = Posterior.uniform(grid)
    config = PeaConfig(shot_cap=300, decision_rule=rule)
    updated, record = run_step(posterior, float(grid.values()[9]), 0.0, sensor, config, RngStream(4))
    assert not record.decided
    assert record.n_l == 300
    assert updated.weights() == pytest.approx(posterior.weights(), rel=1e-9)


@pytest.mark.parametrize("rule", ["window", "median"])
def test_looser_epsilon_never_needs_more_shots(sensor, rule):
    grid = build_calibration_grid(sensor, SMALL_BASE)
    posterior = Posterior.uniform(grid)
    true_flux = float(grid.values()[17])
    for seed in range(6):
        shots = {}
        for epsilon in (0.4, 1e-4):
            config = PeaConfig(epsilon=epsilon, decision_rule=rule)
            _, record = run_step(posterior, true_flux, sensor.tau_min, sensor, config, RngStream(seed))
            shots[epsilon] = record.n_l
        assert shots[0.4] <= shots[1e-4]


def test_window_run_localizes_every_grid_flux(ideal_sensor, sharp_readout):
    grid = build_calibration_grid(ideal_sensor, SMALL_BASE)
    config = PeaConfig(epsilon=1e-6, max_steps=6, readout=sharp_readout)
    for index in range(grid.count):
        records = run_algorithm(float(grid.values()[index]), ideal_sensor, config, RngStream(2, index), grid=grid)
        assert all(r.decided for r in records)
        assert [r.tau_l_s for r in records] == pytest.approx([ideal_sensor.tau_min * 2 ** i for i in range(6)])
        assert (records[-1].cand_lo, records[-1].cand_hi) == (index, index + 1)


def test_decided_steps_discard_truth_at_most_epsilon(ideal_sensor):
    grid = build_calibration_grid(ideal_sensor, SMALL_BASE)
    epsilon = 0.05
    config = PeaConfig(epsilon=epsilon, max_steps=4, shot_cap=20000)
    decided = wrong = 0
    for index in range(grid.count):
        for k in range(2):
            records = run_algorithm(float(grid.values()[index]), ideal_sensor, config, RngStream(6, index, k), grid=grid)
            lo, hi = 0, grid.count
            for record in records:
                if record.decided and lo <= index < hi:
                    decided += 1
                    wrong += not record.cand_lo <= index < record.cand_hi
                lo, hi = record.cand_lo, record.cand_hi
    assert decided > 400
    assert wrong <= decided * epsilon + 3 * math.sqrt(decided * epsilon * (1 - epsilon))


def test_shot_cap_leaves_step_undecided(sensor):
    grid = build_calibration_grid(sensor, SMALL_BASE)
    posterior = Posterior.uniform(grid)
    config = PeaConfig(shot_cap=10, readout=ReadoutModel(sigma0=50.0, sigma1=50.0))
    true_flux = float(grid.values()[5])
    updated, record = run_step(posterior, true_flux, sensor.tau_min, sensor, config, RngStream(3), l=1)
    assert not record.decided
    assert record.n_l == 10
    assert record.half == NO_DECISION
    assert record.phi_hat == pytest.approx(posterior.mean())
    assert (updated.lo, updated.hi) == (posterior.lo, posterior.hi)


def test_tasks_are_reproducible(sensor, fast_pea):
    grid = build_calibration_grid(sensor, SMALL_BASE)
    flux = float(grid.values()[30])
    first = run_task(sensor, fast_pea, flux, j=2, k=1, seed=5, grid=grid)
    again = run_task(sensor, fast_pea, flux, j=2, k=1, seed=5, grid=grid)
    assert first == again
    assert [row["l"] for row in first] == [1, 2, 3]
    assert all(row["j"] == 2 and row["k"] == 1 for row in first)


def test_pea_config_validation():
    with pytest.raises(ConfigError):
        PeaConfig(epsilon=0.6)
    with pytest.raises(ConfigError):
        PeaConfig(cap_policy="bogus")
    with pytest.raises(ConfigError):
        PeaConfig(max_steps=0)
    with pytest.raises(ConfigError):
        PeaConfig(decision_rule="bisect")
    config = PeaConfig(readout=ReadoutModel(sigma0=0.5))
    assert PeaConfig.from_dict(config.to_dict()) == config
