"""
Experiment results: the (flux j, repetition k, step l) record table of one sensor.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

RECORD_COLUMNS = [
    "j", "flux_true", "k", "l", "tau_l_s", "n_l", "half", "phi_hat", "decided", "cand_lo", "cand_hi",
]
SORT_KEYS = ["j", "k", "l"]


@dataclass
class ExperimentResult:
    """
    Dense step records of one sensor.

    j and k are 0-based, l is 1-based. ``config`` echoes the resolved settings the
    records were produced with.
    """

    records: pd.DataFrame
    label: str = ""
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [c for c in RECORD_COLUMNS if c not in self.records.columns]
        if missing:
            raise ValueError(f"records are missing columns: {', '.join(missing)}")
        self.records = self.records[RECORD_COLUMNS].sort_values(SORT_KEYS).reset_index(drop=True)

    @classmethod
    def from_rows(cls, rows: list[dict], label: str = "", config: Optional[dict] = None) -> "ExperimentResult":
        return cls(pd.DataFrame(rows, columns=RECORD_COLUMNS), label, config or {})

    @property
    def true_fluxes(self) -> np.ndarray:
        """Phi_j indexed by j."""
        return self.records.groupby("j")["flux_true"].first().to_numpy()

    @property
    def n_fluxes(self) -> int:
        return int(self.records["j"].nunique())

    @property
    def n_repetitions(self) -> int:
        return int(self.records["k"].nunique())

    @property
    def n_steps(self) -> int:
        return int(self.records["l"].max()) if len(self.records) else 0

    def is_rectangular(self) -> bool:
        """Every (j, k) pair carries steps 1..L exactly once."""
        expected = self.n_fluxes * self.n_repetitions * self.n_steps
        if len(self.records) != expected:
            return False
        counts = self.records.groupby(["j", "k"])["l"].agg(["count", "min", "max"])
        return bool(((counts["count"] == self.n_steps) & (counts["min"] == 1) & (counts["max"] == self.n_steps)).all())

    def complete_tasks(self, max_steps: int) -> "ExperimentResult":
        """Restrict to (j, k) tasks that carry all ``max_steps`` steps."""
        counts = self.records.groupby(["j", "k"])["l"].transform("count")
        return ExperimentResult(self.records[counts == max_steps], self.label, self.config)

    def step(self, l: int) -> pd.DataFrame:
        return self.records[self.records["l"] == l]

    def undecided_fraction(self) -> float:
        if not len(self.records):
            return 0.0
        return float((~self.records["decided"].astype(bool)).mean())
