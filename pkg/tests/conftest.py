"""Shared fixtures: small sensors and fast estimator settings."""
import pytest

from src.estimation.kitaev import PeaConfig
from src.estimation.readout import ReadoutModel
from src.models.sensor import SensorConfig

# grids of a few dozen points keep estimator runs fast
SMALL_BASE = 64


@pytest.fixture
def sensor():
    return SensorConfig()


@pytest.fixture
def ideal_sensor():
    return SensorConfig(gamma1=0.0, gamma_phi=0.0, label="ideal")


@pytest.fixture
def sharp_readout():
    return ReadoutModel(sigma0=0.05, sigma1=0.05)


@pytest.fixture
def fast_pea():
    return PeaConfig(max_steps=3, shot_cap=2000)
