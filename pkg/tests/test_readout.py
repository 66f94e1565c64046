import numpy as np
import pytest
from scipy.stats import norm

from src.errors import ConfigError
from src.estimation.readout import (
    ReadoutModel,
    RngStream,
    likelihood_normalization,
    sample_shot,
    shot_loglikelihood,
)


@pytest.mark.parametrize("p1", [0.0, 0.25, 0.5, 1.0])
def test_likelihood_integrates_to_one(p1):
    assert likelihood_normalization(p1, ReadoutModel()) == pytest.approx(1.0, abs=1e-6)


def test_pure_state_likelihood_is_single_gaussian():
    readout = ReadoutModel(sigma0=0.7, sigma1=1.2)
    x = np.array([-1.0, 0.3, 2.5])
    assert np.allclose(shot_loglikelihood(x, 1.0, readout), norm.logpdf(x, 1.0, 1.2))
    assert np.allclose(shot_loglikelihood(x, 0.0, readout), norm.logpdf(x, 0.0, 0.7))


def test_mixture_likelihood():
    readout = ReadoutModel()
    x, p1 = 0.4, 0.3
    expected = np.log(p1 * norm.pdf(x, 1.0, 1.5) + (1 - p1) * norm.pdf(x, 0.0, 1.5))
    assert shot_loglikelihood(x, p1, readout) == pytest.approx(expected)


def test_stream_is_reproducible_per_task():
    first = RngStream(7, j=3, k=2).uniform(5)
    again = RngStream(7, j=3, k=2).uniform(5)
    other = RngStream(7, j=3, k=4).uniform(5)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)


def test_sharp_readout_separates_states():
    readout = ReadoutModel(sigma0=0.01, sigma1=0.01)
    excited = readout.sample(1.0, RngStream(0), 500)
    ground = readout.sample(0.0, RngStream(1), 500)
    assert np.all(np.abs(excited - 1.0) < 0.1)
    assert np.all(np.abs(ground) < 0.1)


def test_sample_shot_checks_probability():
    with pytest.raises(ValueError):
        sample_shot(1.5, ReadoutModel(), RngStream(0))
    assert isinstance(sample_shot(0.5, ReadoutModel(), RngStream(0)), float)


def test_readout_validation():
    with pytest.raises(ConfigError):
        ReadoutModel(sigma0=0.0)
    with pytest.raises(ConfigError):
        ReadoutModel(mu0=1.0, mu1=1.0)


def test_balanced_outcomes_average_to_midpoint():
    readout = ReadoutModel(mu0=0.0, mu1=1.0, sigma0=0.5, sigma1=0.5)
    assert readout.sample(0.5, RngStream(21), 10 ** 6).mean() == pytest.approx(0.5, abs=0.005)
    rng = RngStream(22)
    shots = [sample_shot(0.5, readout, rng) for _ in range(20000)]
    assert np.mean(shots) == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("x", [0.6, 1.0, 3.0])
def test_likelihood_grows_with_p1_above_midpoint(x):
    readout = ReadoutModel(sigma0=0.8, sigma1=0.8)
    p1 = np.linspace(0.0, 1.0, 11)
    values = shot_loglikelihood(x, p1, readout)
    assert np.all(np.diff(values) > 0)
    assert np.all(np.diff(shot_loglikelihood(1.0 - x, p1, readout)) < 0)
