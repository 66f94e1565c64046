"""Dense density matrices over an N-qubit register (qubit 0 most significant)."""
import logging
import os
from typing import Optional

import numpy as np
import pandas as pd

from ..pipeline.persistence import write_frame

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


class DensityMatrix:
    """A 2^N x 2^N complex density matrix."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=complex)
        dim = data.shape[0]
        if data.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
            raise ValueError(f"density matrix must be square with power-of-two size, got {data.shape}")
        self.data = data
        self.n_qubits = dim.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "DensityMatrix":
        data = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
        data[index, index] = 1.0
        return cls(data)

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.data.copy())

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def probabilities(self) -> np.ndarray:
        """Computational-basis populations, clipped at zero."""
        return np.clip(np.real(np.diag(self.data)), 0.0, None)

    def probability(self, bits: str) -> float:
        """Population of the basis state written as a bit string, e.g. '10'."""
        return float(self.probabilities()[int(bits, 2)])

    def deviations(self) -> dict:
        """Distances from the density-matrix invariants."""
        return {
            "hermiticity": float(np.max(np.abs(self.data - self.data.conj().T))),
            "trace": float(abs(self.trace() - 1.0)),
            "min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)))),
        }

    def is_valid(self) -> bool:
        d = self.deviations()
        return (
            d["hermiticity"] <= HERMITIAN_TOL
            and d["trace"] <= TRACE_TOL
            and d["min_eigenvalue"] >= -POSITIVITY_TOL
        )

    def ghz_fidelity(self) -> float:
        """
        Overlap with (|0..0> + e^{i theta}|1..1>)/sqrt(2), maximized over theta.

        For two qubits this is the Bell fidelity up to local phases.
        """
        last = self.dim - 1
        rho = self.data
        return float(0.5 * (rho[0, 0].real + rho[last, last].real) + abs(rho[0, last]))

    def to_frame(self) -> pd.DataFrame:
        rows, cols = np.indices(self.data.shape)
        return pd.DataFrame({
            "row": rows.ravel(),
            "col": cols.ravel(),
            "re": self.data.real.ravel(),
            "im": self.data.imag.ravel(),
        })

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


class SnapshotWriter:
    """
    Dumps density matrices as (row, col, re, im) CSV files into a directory.

    Every file carries the reproducibility header of ``config`` and ``seed``.
    """

    def __init__(self, directory: Optional[str], config: Optional[dict] = None, seed: Optional[int] = None):
        self.directory = directory
        self.config = config or {}
        self.seed = seed
        self.counter = 0
        if directory:
            os.makedirs(directory, exist_ok=True)

    def write(self, rho: DensityMatrix, label: str):
        if not self.directory:
            return
        path = os.path.join(self.directory, f"rho_{self.counter:04d}_{label}.csv")
        write_frame(rho.to_frame(), path, self.config, self.seed, index=False)
        self.counter += 1
        logger.debug("snapshot written: %s", path)
