"""
Lindblad evolution of small registers.

The master equation is vectorized row-major, vec(A rho B) = (A kron B^T) vec(rho),
and integrated with fixed-step RK4. For a linear generator one RK4 step is the
matrix polynomial I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, so n steps are a
single matrix power.
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Sequence

import numpy as np

from ..errors import EngineCapacityError, IntegratorError
from .density import DensityMatrix
from .gates import LOWERING, PAULI, embed

logger = logging.getLogger(__name__)

MAX_QUBITS = 3
DEFAULT_TOL = 1e-8
# initial step keeps h * ||L|| at or below this value
_INITIAL_STEP_NORM = 0.05
_MAX_STEPS = 2 ** 24


@dataclass(frozen=True)
class LindbladSpec:
    """
    Rotating-frame generator: H = sum_q detuning_q sigma_z^(q) / 2, relaxation
    sqrt(gamma1) |0><1| and dephasing sqrt(gamma_phi / 2) sigma_z on every qubit.

    With ``correlated_dephasing`` the per-qubit dephasing operators are replaced by
    one collective sqrt(gamma_phi / 2) * sum_q sigma_z^(q).
    """

    detunings: Sequence[float] = field(default_factory=lambda: (0.0,))
    gamma1: float = 0.0
    gamma_phi: float = 0.0
    correlated_dephasing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "detunings", tuple(float(d) for d in self.detunings))
        if self.gamma1 < 0 or self.gamma_phi < 0:
            raise ValueError("decoherence rates must be non-negative")

    @property
    def n_qubits(self) -> int:
        return len(self.detunings)

    @classmethod
    def uniform(cls, n_qubits: int, detuning: float, gamma1: float, gamma_phi: float,
                correlated_dephasing: bool = False) -> "LindbladSpec":
        return cls((detuning,) * n_qubits, gamma1, gamma_phi, correlated_dephasing)

    def without_field(self) -> "LindbladSpec":
        """Decoherence only; used while gates are being applied."""
        return LindbladSpec((0.0,) * self.n_qubits, self.gamma1, self.gamma_phi, self.correlated_dephasing)

    def hamiltonian(self) -> np.ndarray:
        n = self.n_qubits
        return sum(0.5 * dw * embed(PAULI["z"], q, n) for q, dw in enumerate(self.detunings))

    def collapse_operators(self) -> list[np.ndarray]:
        n = self.n_qubits
        ops = []
        if self.gamma1 > 0:
            ops += [math.sqrt(self.gamma1) * embed(LOWERING, q, n) for q in range(n)]
        if self.gamma_phi > 0:
            amplitude = math.sqrt(self.gamma_phi / 2.0)
            if self.correlated_dephasing:
                ops.append(amplitude * sum(embed(PAULI["z"], q, n) for q in range(n)))
            else:
                ops += [amplitude * embed(PAULI["z"], q, n) for q in range(n)]
        return ops


def lindblad_rhs(rho: np.ndarray, spec: LindbladSpec) -> np.ndarray:
    """d rho / dt evaluated directly on the matrix."""
    h = spec.hamiltonian()
    drho = -1j * (h @ rho - rho @ h)
    for c in spec.collapse_operators():
        cd = c.conj().T
        cdc = cd @ c
        drho = drho + c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)
    return drho


def liouvillian(spec: LindbladSpec) -> np.ndarray:
    """Superoperator L with d vec(rho)/dt = L vec(rho)."""
    dim = 2 ** spec.n_qubits
    eye = np.eye(dim, dtype=complex)
    h = spec.hamiltonian()
    generator = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in spec.collapse_operators():
        cdc = c.conj().T @ c
        generator += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    return generator


def rk4_propagator(generator: np.ndarray, step: float) -> np.ndarray:
    """One RK4 step of d v/dt = L v as a matrix."""
    hl = step * generator
    eye = np.eye(generator.shape[0], dtype=complex)
    hl2 = hl @ hl
    hl3 = hl2 @ hl
    return eye + hl + hl2 / 2.0 + hl3 / 6.0 + hl3 @ hl / 24.0


def _integrate(generator: np.ndarray, vector: np.ndarray, tau: float, steps: int) -> np.ndarray:
    propagator = np.linalg.matrix_power(rk4_propagator(generator, tau / steps), steps)
    return propagator @ vector


def evolve(rho: DensityMatrix, spec: LindbladSpec, tau: float, tol: float = DEFAULT_TOL) -> DensityMatrix:
    """
    Evolve ``rho`` for ``tau`` seconds.

    The step count doubles until halving the step changes every entry by less than
    ``tol``. The result is Hermitized and its trace renormalized.

    Raises:
        EngineCapacityError: register above the engine cap
        IntegratorError: no convergence before the minimum step
    """
    if tau < 0:
        raise ValueError("evolution time must be non-negative")
    if rho.n_qubits > MAX_QUBITS:
        raise EngineCapacityError(f"engine supports at most {MAX_QUBITS} qubits, got {rho.n_qubits}")
    if spec.n_qubits != rho.n_qubits:
        raise ValueError(f"generator acts on {spec.n_qubits} qubits, state has {rho.n_qubits}")
    if tau == 0:
        return rho.copy()

    generator = liouvillian(spec)
    scale = float(np.max(np.sum(np.abs(generator), axis=1)))
    vector = rho.data.reshape(-1)
    if scale == 0:
        return rho.copy()

    steps = max(1, math.ceil(tau * scale / _INITIAL_STEP_NORM))
    coarse = _integrate(generator, vector, tau, steps)
    while True:
        if 2 * steps > _MAX_STEPS:
            raise IntegratorError(
                f"RK4 did not reach tolerance {tol:g} within {_MAX_STEPS} steps (tau={tau:g} s)"
            )
        fine = _integrate(generator, vector, tau, 2 * steps)
        change = float(np.max(np.abs(fine - coarse)))
        steps *= 2
        if change < tol:
            break
        coarse = fine
    logger.debug("evolve: tau=%.3e s converged with %d RK4 steps", tau, steps)

    data = fine.reshape(rho.data.shape)
    data = 0.5 * (data + data.conj().T)
    trace = np.real(np.trace(data))
    if trace > 0:
        data = data / trace
    return DensityMatrix(data)
