"""
Single-shot readout: Gaussian-mixture outcomes and per-shot likelihoods.

Outcomes are dimensionless; with the default means the state separation is 1
and the widths are expressed in units of that separation.
"""
from dataclasses import dataclass, asdict
import math

import numpy as np
from scipy.stats import norm

from ..errors import ConfigError


@dataclass(frozen=True)
class ReadoutModel:
    """Outcome distribution N(mu1, sigma1) for |1> and N(mu0, sigma0) for |0>."""

    mu0: float = 0.0
    mu1: float = 1.0
    sigma0: float = 1.5
    sigma1: float = 1.5

    def __post_init__(self):
        if self.sigma0 <= 0 or self.sigma1 <= 0:
            raise ConfigError("readout widths must be positive")
        if self.mu0 == self.mu1:
            raise ConfigError("readout means must differ")

    def component_logpdf(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Log-densities of the |0> and |1> components at ``x``."""
        x = np.asarray(x, dtype=float)
        return (
            norm.logpdf(x, loc=self.mu0, scale=self.sigma0),
            norm.logpdf(x, loc=self.mu1, scale=self.sigma1),
        )

    def sample(self, p1: float, rng: "RngStream", size: int) -> np.ndarray:
        """Draw ``size`` outcomes for excited-state probability ``p1``."""
        excited = rng.uniform(size) < p1
        z = rng.normal(size)
        return np.where(excited, self.mu1 + self.sigma1 * z, self.mu0 + self.sigma0 * z)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ReadoutModel":
        return cls(**data)


class RngStream:
    """
    Counter-based random stream owned by one (flux j, repetition k) task.

    The same (seed, j, k) always yields the same outcome sequence, independent of
    which worker runs the task or in which order tasks complete.
    """

    def __init__(self, seed: int, j: int = 0, k: int = 0):
        self.seed = int(seed)
        self.j = int(j)
        self.k = int(k)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.j, self.k))
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def uniform(self, size: int) -> np.ndarray:
        return self._generator.random(size)

    def normal(self, size: int) -> np.ndarray:
        return self._generator.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, j={self.j}, k={self.k})"


def sample_shot(p1: float, readout: ReadoutModel, rng: RngStream) -> float:
    """One readout outcome: N(mu1, sigma1) with probability p1, else N(mu0, sigma0)."""
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"p1 must lie in [0, 1], got {p1}")
    return float(readout.sample(p1, rng, 1)[0])


def mixture_loglikelihood(log0, log1, p1):
    """log[p1 * exp(log1) + (1 - p1) * exp(log0)], broadcasting over all arguments."""
    p1 = np.asarray(p1, dtype=float)
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(p1) + log1, np.log1p(-p1) + log0)


def shot_loglikelihood(x, p1, readout: ReadoutModel):
    """Log-density of outcome ``x`` given excited-state probability ``p1``."""
    log0, log1 = readout.component_logpdf(x)
    result = mixture_loglikelihood(log0, log1, p1)
    return float(result) if np.ndim(result) == 0 else result


def likelihood_normalization(p1: float, readout: ReadoutModel) -> float:
    """Integral of exp(shot_loglikelihood) over the real line (quadrature)."""
    from scipy.integrate import quad

    spread = 12.0 * max(readout.sigma0, readout.sigma1)
    low = min(readout.mu0, readout.mu1) - spread
    high = max(readout.mu0, readout.mu1) + spread
    value, _ = quad(
        lambda x: math.exp(shot_loglikelihood(x, p1, readout)),
        low,
        high,
        points=[readout.mu0, readout.mu1],
        limit=200,
    )
    return value
