"""
Dense Liouvillian superoperator of the white-noise master equation.

Density matrices are vectorized row-major, mu = u1 * 2^N + u2, so that
vec(A rho B) = (A kron B^T) vec(rho). The stored matrix is M = -L; its eigenvalues are
gamma_mu - i beta_mu with decay rates gamma_mu >= 0, sorted ascending.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .algebra import build_ising_hamiltonian, build_pauli, build_product_state
from .config import resolve_worker_count
from .exceptions import NumericalError, ParameterError
from .observables import magnetization
from .structures import DenseOperator, DensityMatrix, ModelParams, pure_density_matrix

logger = logging.getLogger(__name__)

MAX_DENSE_QUBITS = 6
MAX_SCAN_QUBITS = 5
CONDITION_LIMIT = 1e12
STATIONARY_TOL = 1e-10
STATIONARY_RESIDUAL = 1e-8


@dataclass(frozen=True)
class Superoperator:
    """M = -L acting on row-major vectorized 2^N x 2^N matrices."""

    matrix: NDArray[np.complex128]
    params: ModelParams

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def apply(self, rho: DenseOperator) -> DenseOperator:
        """Return L(rho) = -M vec(rho), reshaped back to a matrix."""
        d = self.params.dim
        return -(self.matrix @ np.asarray(rho, dtype=complex).reshape(d * d)).reshape(d, d)


@dataclass(frozen=True)
class LiouvillianSpectrum:
    """
    Diagonalization M = D^-1 E D with E = diag(gamma - i beta).

    ``d_inverse`` holds the right eigenvectors as columns and ``d_matrix`` the matching
    left eigenvectors as rows, in the order of ``gammas``.
    """

    gammas: NDArray[np.float64]
    betas: NDArray[np.float64]
    d_matrix: NDArray[np.complex128]
    d_inverse: NDArray[np.complex128]
    params: ModelParams
    condition: float = field(default=1.0)

    @property
    def eigenvalues(self) -> NDArray[np.complex128]:
        return self.gammas - 1j * self.betas

    def lowest(self, n_modes: int) -> NDArray[np.float64]:
        return self.gammas[:n_modes].copy()


@dataclass
class MetastabilityScan:
    """
    Low-lying decay rates over a lambda grid and, optionally, the initial-state map of m_ms.

    ``rates`` has one row per lambda; ``initial_state_map`` holds (lambda, A, phi, m_ms) rows.
    """

    lambdas: NDArray[np.float64]
    rates: NDArray[np.float64]
    betas: NDArray[np.float64]
    initial_state_map: List[Tuple[float, float, float, float]] = field(default_factory=list)


def memory_estimate(n_qubits: int) -> int:
    """Bytes needed for one dense complex 4^N x 4^N matrix."""
    return (4**n_qubits) ** 2 * 16


def build_liouvillian(params: ModelParams) -> Superoperator:
    """
    Build M = -L with L = -i (H kron I - I kron H^T) + Gamma sum_k (sx_k kron sx_k^T - I).

    Raises
    ------
    ParameterError
        If N exceeds the dense limit of 6 qubits.
    """
    if params.n_qubits > MAX_DENSE_QUBITS:
        raise ParameterError(
            "liouvillian",
            f"dense superoperator limited to N <= {MAX_DENSE_QUBITS}",
            details={"n_qubits": params.n_qubits, "bytes": memory_estimate(params.n_qubits)},
        )
    if params.n_qubits == MAX_DENSE_QUBITS:
        logger.warning("Dense Liouvillian at N=%d needs about %.0f MB per matrix", params.n_qubits, memory_estimate(params.n_qubits) / 1e6)

    h = build_ising_hamiltonian(params)
    eye = np.eye(params.dim, dtype=complex)
    generator = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for k in range(1, params.n_qubits + 1):
        x = build_pauli(k, "x", params)
        generator += params.gamma * np.kron(x, x.T)
    generator -= params.n_qubits * params.gamma * np.eye(params.dim**2, dtype=complex)
    return Superoperator(matrix=-generator, params=params)


def liouvillian_spectrum(m: Superoperator) -> LiouvillianSpectrum:
    """
    Diagonalize M with the general dense eigensolver.

    Modes are sorted by gamma ascending (ties by beta). An eigenvector condition number above
    1e12 is logged as near-defectiveness.
    """
    values, right = scipy.linalg.eig(m.matrix)
    gammas = values.real
    betas = -values.imag
    order = np.lexsort((betas, np.round(gammas, 9)))
    right = right[:, order]
    condition = float(np.linalg.cond(right))
    if condition > CONDITION_LIMIT:
        logger.warning("Liouvillian eigenvectors are ill-conditioned (cond=%.3g); the generator may be near-defective", condition)
    left = np.linalg.inv(right)
    logger.debug("Liouvillian spectrum: gamma_0=%.3g gamma_max=%.6g", gammas[order[0]], gammas[order[-1]])
    return LiouvillianSpectrum(
        gammas=gammas[order].copy(),
        betas=betas[order].copy(),
        d_matrix=left,
        d_inverse=right,
        params=m.params,
        condition=condition,
    )


def stationary_state(spec: LiouvillianSpectrum) -> DensityMatrix:
    """
    The gamma_0 right eigenvector as a Hermitian, unit-trace density matrix.

    Raises
    ------
    NumericalError
        If the stationary subspace is degenerate or the residual ||L(rho_ss)|| exceeds 1e-8.
    """
    zero_modes = int(np.count_nonzero((np.abs(spec.gammas) < STATIONARY_TOL) & (np.abs(spec.betas) < STATIONARY_TOL)))
    if zero_modes != 1:
        raise NumericalError("liouvillian", "stationary subspace is not one-dimensional", details={"dimension": zero_modes})
    d = spec.params.dim
    rho = spec.d_inverse[:, 0].reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho)
    residual = float(np.linalg.norm(build_liouvillian(spec.params).matrix @ rho.reshape(d * d)))
    if residual > STATIONARY_RESIDUAL:
        raise NumericalError("liouvillian", "stationary-state residual too large", details={"residual": residual})
    return rho


def propagate_spectral(rho0: DenseOperator, spec: LiouvillianSpectrum, t: float) -> DenseOperator:
    """
    R(t) = D^-1 exp(-E t) D R(0).

    Any 2^N x 2^N matrix may be propagated, which the regression correlations rely on.

    Raises
    ------
    ParameterError
        If ``t`` is negative or the dimension does not match.
    """
    if t < 0:
        raise ParameterError("liouvillian", "propagation time must be non-negative", details={"t": t})
    d = spec.params.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ParameterError("liouvillian", "matrix dimension mismatch", details={"expected": d})
    coeffs = spec.d_matrix @ rho0.reshape(d * d)
    return (spec.d_inverse @ (np.exp(-spec.eigenvalues * t) * coeffs)).reshape(d, d)


def _scan_point(params: ModelParams, lam: float, t_max: float, states: Sequence[Tuple[float, float]]) -> Tuple[LiouvillianSpectrum, List[float]]:
    point = replace(params, lambda_=lam)
    spec = liouvillian_spectrum(build_liouvillian(point))
    values = []
    for amplitude, phase in states:
        rho0 = pure_density_matrix(build_product_state([(amplitude, phase)], point))
        values.append(magnetization(propagate_spectral(rho0, spec, t_max), point))
    return spec, values


def metastability_scan(
    params: ModelParams,
    lambda_grid: Sequence[float],
    n_modes: int = 8,
    initial_states: Optional[Sequence[Tuple[float, float]]] = None,
    max_workers: Optional[int] = None,
) -> MetastabilityScan:
    """
    Lowest ``n_modes`` decay rates for each lambda, plus m_ms = m(t_max) for each product
    initial state (A, phi) broadcast to every qubit.

    Lambda points are diagonalized in parallel; results keep the order of ``lambda_grid``.

    Raises
    ------
    ParameterError
        If N exceeds 5.
    """
    if params.n_qubits > MAX_SCAN_QUBITS:
        raise ParameterError("liouvillian", f"metastability scans are limited to N <= {MAX_SCAN_QUBITS}", details={"n_qubits": params.n_qubits})
    states = list(initial_states or [])
    lambdas = [float(v) for v in lambda_grid]
    with ThreadPoolExecutor(max_workers=resolve_worker_count(len(lambdas), max_workers)) as pool:
        results = list(pool.map(lambda lam: _scan_point(params, lam, params.t_max, states), lambdas))

    scan = MetastabilityScan(
        lambdas=np.array(lambdas),
        rates=np.array([spec.gammas[:n_modes] for spec, _ in results]) if results else np.zeros((0, n_modes)),
        betas=np.array([spec.betas[:n_modes] for spec, _ in results]) if results else np.zeros((0, n_modes)),
    )
    for lam, (_, values) in zip(lambdas, results):
        for (amplitude, phase), m_ms in zip(states, values):
            scan.initial_state_map.append((lam, amplitude, phase, m_ms))
    return scan
