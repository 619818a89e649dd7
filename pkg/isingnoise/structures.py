"""
Shared data structures for the dissipative Ising simulations.

All quantities are in reduced units: hbar = 1, Gamma = 1, frequencies in Gamma and
times in 1/Gamma.

Basis convention:
  - Per qubit, |up> is index 0 and |down> is index 1.
  - Qubit 1 is the most significant bit of the product-basis index.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from .exceptions import ParameterError

# Dense complex 2^N x 2^N matrix in the spin product basis.
DenseOperator = NDArray[np.complex128]
# Complex 2^N amplitude vector.
StateVector = NDArray[np.complex128]
# Dense complex 2^N x 2^N density matrix.
DensityMatrix = NDArray[np.complex128]

MAX_QUBITS = 12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class ModelParams:
    """
    Physics parameters of the dissipative, fully-coupled transverse-field Ising model.

    Units:
      - epsilon, lambda_, gamma, f0: frequencies in units of Gamma.
      - t_max: time in units of 1/Gamma.
    """

    n_qubits: int = 1
    epsilon: float = 10.0
    lambda_: float = 0.0
    gamma: float = 1.0
    f0: float = 500.0
    t_max: float = 10.0

    def __post_init__(self) -> None:
        details: Dict[str, float] = {
            "n_qubits": self.n_qubits,
            "epsilon": self.epsilon,
            "lambda": self.lambda_,
            "gamma": self.gamma,
            "f0": self.f0,
            "t_max": self.t_max,
        }
        if int(self.n_qubits) != self.n_qubits or not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ParameterError("model", f"n_qubits must be an integer in [1, {MAX_QUBITS}]", details=details)
        if not self.epsilon > 0:
            raise ParameterError("model", "epsilon must be positive", details=details)
        if not self.lambda_ >= 0:
            raise ParameterError("model", "lambda must be non-negative", details=details)
        if not self.gamma >= 0:
            raise ParameterError("model", "gamma must be non-negative", details=details)
        if not self.t_max > 0:
            raise ParameterError("model", "t_max must be positive", details=details)
        # 2*pi*f0 must exceed both epsilon and lambda
        if not (self.f0 > self.epsilon / math.pi and self.f0 > self.lambda_ / math.pi):
            raise ParameterError("model", "sampling frequency must satisfy 2*pi*f0 > epsilon, lambda", details=details)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension 2^N."""
        return 2**self.n_qubits

    @property
    def noise_dt(self) -> float:
        """Sampling period 1/f0 of the noise grid."""
        return 1.0 / self.f0


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Eigen-decomposition of the system Hamiltonian.

    ``omegas`` are ascending eigenfrequencies and ``vectors`` holds the eigenstates |alpha>
    as columns.
    """

    omegas: NDArray[np.float64]
    vectors: DenseOperator

    @property
    def dim(self) -> int:
        return int(self.omegas.shape[0])

    def ground_state(self) -> StateVector:
        """Return |alpha=0>."""
        return np.array(self.vectors[:, 0], dtype=complex)

    def bohr_frequencies(self) -> NDArray[np.float64]:
        """Matrix of transition frequencies omega_alpha - omega_alpha'."""
        return np.subtract.outer(self.omegas, self.omegas)

    def to_eigenbasis(self, operator: DenseOperator) -> DenseOperator:
        """Express a product-basis operator in the eigenbasis."""
        return self.vectors.conj().T @ operator @ self.vectors

    def from_eigenbasis(self, operator: DenseOperator) -> DenseOperator:
        """Express an eigenbasis operator in the product basis."""
        return self.vectors @ operator @ self.vectors.conj().T


@dataclass(frozen=True)
class EvolutionGrid:
    """
    Fixed time grid shared by the solvers.

    ``dt`` is the sampling (and noise) step, ``sample_stride`` thins the stored samples and
    ``substeps`` refines the RK4 step inside each grid step (``None`` selects it from the
    model's frequency scales).
    """

    dt: float
    t_max: float
    sample_stride: int = 1
    substeps: Optional[int] = None

    def __post_init__(self) -> None:
        details = {"dt": self.dt, "t_max": self.t_max, "sample_stride": self.sample_stride}
        if not self.dt > 0 or not self.t_max > 0:
            raise ParameterError("grid", "dt and t_max must be positive", details=details)
        ratio = self.t_max / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ParameterError("grid", "t_max must be an integer multiple of dt", details=details)
        if self.sample_stride < 1 or self.n_steps % self.sample_stride != 0:
            raise ParameterError("grid", "sample_stride must be a positive divisor of the step count", details=details)
        if self.substeps is not None and self.substeps < 1:
            raise ParameterError("grid", "substeps must be positive", details=details)

    @classmethod
    def for_model(cls, params: ModelParams, sample_stride: int = 1, dt: Optional[float] = None) -> "EvolutionGrid":
        """Grid aligned with the noise sampling period 1/f0 unless ``dt`` is given."""
        return cls(dt=params.noise_dt if dt is None else dt, t_max=params.t_max, sample_stride=sample_stride)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.sample_stride + 1

    def sample_times(self) -> NDArray[np.float64]:
        return np.arange(self.n_samples) * (self.dt * self.sample_stride)


@dataclass(frozen=True)
class MeanFieldState:
    """Single-spin factorized expectation values (x, y, m)."""

    x: float
    y: float
    m: float

    def __post_init__(self) -> None:
        if self.x**2 + self.y**2 + self.m**2 > 1.0 + 1e-8:
            raise ParameterError("mean-field", "state lies outside the Bloch ball", details={"x": self.x, "y": self.y, "m": self.m})

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.x, self.y, self.m], dtype=float)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass
class ObservableSeries:
    """Sampled scalar observable such as m(t), w(t) or S(t)."""

    times: NDArray[np.float64]
    values: NDArray[np.float64]
    name: str
    meta: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ParameterError("observables", "times and values must have equal lengths", details={"name": self.name})
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ParameterError("observables", "times must be strictly ascending", details={"name": self.name})


@dataclass
class EvolutionResult:
    """
    Output of a density-matrix evolution.

    ``series`` maps a column name (``m``, ``trace_err``, ``min_eig``, ``w``, ``entropy``,
    ``gamma_eff``) to its sampled values; ``states`` is filled only when requested.
    """

    times: NDArray[np.float64]
    series: Dict[str, NDArray[np.float64]]
    final_state: DensityMatrix
    states: List[DensityMatrix] = field(default_factory=list)

    def observable(self, name: str) -> ObservableSeries:
        return ObservableSeries(self.times, self.series[name], name)


def validate_state_vector(psi: StateVector, params: ModelParams, tol: float = 1e-10) -> StateVector:
    """
    Check dimension and normalization of a state vector.

    Raises
    ------
    ParameterError
        If the dimension does not match 2^N or the norm differs from 1.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (params.dim,):
        raise ParameterError("state", "state vector dimension mismatch", details={"expected": params.dim, "got": str(psi.shape)})
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > tol:
        raise ParameterError("state", "state vector is not normalized", details={"norm": norm})
    return psi


def validate_density_matrix(rho: DensityMatrix, params: ModelParams) -> DensityMatrix:
    """
    Check the density-matrix contract: Hermitian, unit trace, positive semidefinite.

    Raises
    ------
    ParameterError
        If any of the construction invariants is violated.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (params.dim, params.dim):
        raise ParameterError("state", "density matrix dimension mismatch", details={"expected": params.dim, "got": str(rho.shape)})
    herm_err = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_err > HERMITIAN_TOL:
        raise ParameterError("state", "density matrix is not Hermitian", details={"max_deviation": herm_err})
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > TRACE_TOL:
        raise ParameterError("state", "density matrix trace differs from 1", details={"trace": str(trace)})
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < POSITIVITY_TOL:
        raise ParameterError("state", "density matrix is not positive semidefinite", details={"min_eig": min_eig})
    return rho


def pure_density_matrix(psi: StateVector) -> DensityMatrix:
    """Return |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def maximally_mixed(params: ModelParams) -> DensityMatrix:
    """Return I / 2^N."""
    return np.eye(params.dim, dtype=complex) / params.dim
