"""Grid posterior over a contiguous run of candidate fluxes."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from ..models.sensor import FluxGrid

LOWER = "lower"
MIDDLE = "middle"
UPPER = "upper"
NO_DECISION = "none"


@dataclass(frozen=True, eq=False)
class Posterior:
    """
    Normalized log-weights over grid indices [lo, hi).

    The candidate set is always contiguous; ``log_weights`` has hi - lo entries and
    logsumexp(log_weights) == 0.
    """

    grid: FluxGrid
    lo: int
    hi: int
    log_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= self.grid.count:
            raise ValueError(f"invalid candidate range [{self.lo}, {self.hi})")
        if self.log_weights.shape != (self.hi - self.lo,):
            raise ValueError("log_weights must have one entry per candidate")

    @classmethod
    def uniform(cls, grid: FluxGrid, lo: int = 0, hi: Optional[int] = None) -> "Posterior":
        hi = grid.count if hi is None else hi
        count = hi - lo
        return cls(grid, lo, hi, np.full(count, -np.log(count)))

    @classmethod
    def from_log_weights(cls, grid: FluxGrid, lo: int, log_weights: np.ndarray) -> "Posterior":
        """Build a posterior from unnormalized log-weights."""
        log_weights = np.asarray(log_weights, dtype=float)
        return cls(grid, lo, lo + log_weights.size, log_weights - logsumexp(log_weights))

    @property
    def count(self) -> int:
        return self.hi - self.lo

    @property
    def width(self) -> float:
        """Flux width of the surviving cells."""
        return self.count * self.grid.step

    @property
    def split(self) -> int:
        """Number of candidates in the lower half."""
        return self.count // 2

    def candidates(self) -> np.ndarray:
        return self.grid.start + self.grid.step * np.arange(self.lo, self.hi)

    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def mean(self) -> float:
        return float(np.dot(self.weights(), self.candidates()))

    def half_masses(self) -> tuple[float, float]:
        split = self.split
        return (
            float(np.exp(logsumexp(self.log_weights[:split]))),
            float(np.exp(logsumexp(self.log_weights[split:]))),
        )

    def keep(self, half: str) -> "Posterior":
        """Discard the other half and renormalize."""
        split = self.split
        if half == LOWER:
            return Posterior.from_log_weights(self.grid, self.lo, self.log_weights[:split])
        if half == UPPER:
            return Posterior.from_log_weights(self.grid, self.lo + split, self.log_weights[split:])
        raise ValueError(f"unknown half '{half}'")

    @property
    def window_size(self) -> int:
        """Candidates kept by a window decision: ceil(count / 2)."""
        return (self.count + 1) // 2

    def window_label(self, start: int) -> str:
        if start == 0:
            return LOWER
        if start + self.window_size == self.count:
            return UPPER
        return MIDDLE

    def keep_window(self, start: int) -> "Posterior":
        """Keep ``window_size`` candidates from relative index ``start`` and renormalize."""
        size = self.window_size
        if not 0 <= start <= self.count - size:
            raise ValueError(f"window start {start} outside [0, {self.count - size}]")
        return Posterior.from_log_weights(self.grid, self.lo + start, self.log_weights[start:start + size])

    def window_masses(self) -> np.ndarray:
        """Posterior mass of every contiguous window of ``window_size`` candidates."""
        return window_masses(self.log_weights[None, :], self.window_size)[0]

    def bounds(self) -> tuple[float, float]:
        """Flux interval covered by the surviving cells."""
        low = self.grid.start + (self.lo - 0.5) * self.grid.step
        return low, low + self.width

    def contains(self, flux: float) -> bool:
        low, high = self.bounds()
        return low <= flux <= high


def window_masses(log_weights: np.ndarray, size: int) -> np.ndarray:
    """
    Masses of all contiguous windows of ``size`` candidates, one row per row of
    normalized ``log_weights``.
    """
    weights = np.exp(log_weights)
    prefix = np.zeros((weights.shape[0], weights.shape[1] + 1))
    np.cumsum(weights, axis=1, out=prefix[:, 1:])
    return prefix[:, size:] - prefix[:, :-size]
