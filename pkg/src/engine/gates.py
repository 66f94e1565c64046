"""Instantaneous gates: single-qubit rotations and conditional-phase gates."""
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Tuple

import numpy as np

from ..errors import IndexRangeError
from .density import DensityMatrix

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY = np.eye(2, dtype=complex)
# lowering operator |0><1| (|1> is the excited state)
LOWERING = np.array([[0, 1], [0, 0]], dtype=complex)

UNITARITY_TOL = 1e-12


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """R_a(theta) = exp(-i theta sigma_a / 2) = cos(theta/2) I - i sin(theta/2) sigma_a."""
    if axis not in PAULI:
        raise ValueError(f"rotation axis must be x, y or z, got '{axis}'")
    return np.cos(angle / 2) * IDENTITY - 1j * np.sin(angle / 2) * PAULI[axis]


def embed(operator: np.ndarray, target: int, n_qubits: int) -> np.ndarray:
    """Lift a single-qubit operator onto ``target`` of an N-qubit register."""
    factors = [operator if q == target else IDENTITY for q in range(n_qubits)]
    return reduce(np.kron, factors)


@dataclass(frozen=True)
class GateOp:
    """
    ``kind`` is 'rotation' (targets=(q,), axis, angle) or 'cphase'
    (targets=(control, target), pattern such as '10').
    """

    kind: str
    targets: Tuple[int, ...]
    axis: Optional[str] = None
    angle: float = 0.0
    pattern: Optional[str] = None

    @classmethod
    def ry(cls, target: int, angle: float) -> "GateOp":
        return cls("rotation", (target,), axis="y", angle=angle)

    @classmethod
    def rotation(cls, target: int, axis: str, angle: float) -> "GateOp":
        return cls("rotation", (target,), axis=axis, angle=angle)

    @classmethod
    def cphase(cls, first: int, second: int, pattern: str) -> "GateOp":
        return cls("cphase", (first, second), pattern=pattern)

    def unitary(self, n_qubits: int) -> np.ndarray:
        for q in self.targets:
            if not 0 <= q < n_qubits:
                raise IndexRangeError(f"gate target {q} outside a {n_qubits}-qubit register")
        if self.kind == "rotation":
            return embed(rotation_matrix(self.axis, self.angle), self.targets[0], n_qubits)
        if self.kind == "cphase":
            first, second = self.targets
            if first == second or self.pattern not in ("00", "01", "10", "11"):
                raise ValueError(f"invalid conditional-phase gate {self}")
            diagonal = np.ones(2 ** n_qubits, dtype=complex)
            for index in range(diagonal.size):
                bit_a = (index >> (n_qubits - 1 - first)) & 1
                bit_b = (index >> (n_qubits - 1 - second)) & 1
                if f"{bit_a}{bit_b}" == self.pattern:
                    diagonal[index] = -1.0
            return np.diag(diagonal)
        raise ValueError(f"unknown gate kind '{self.kind}'")

    def __str__(self):
        if self.kind == "rotation":
            return f"R{self.axis}{self.targets[0]}({self.angle:.4g})"
        return f"CP{self.pattern}{self.targets}"


def unitarity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))


def apply_gate(rho: DensityMatrix, gate: GateOp) -> DensityMatrix:
    """rho -> U rho U^dagger."""
    u = gate.unitary(rho.n_qubits)
    return DensityMatrix(u @ rho.data @ u.conj().T)
