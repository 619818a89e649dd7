"""
Dense operator algebra for N spins.

Builds Pauli strings, the fully-coupled transverse-field Ising Hamiltonian
H_s = -eps * sum_k sz_k + (lambda/N) * sum_{k<k'} sx_k sx_k', its deterministic
eigendecomposition and product-state constructors.
"""

import logging
from functools import lru_cache
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from .exceptions import ParameterError
from .structures import (
    HERMITIAN_TOL,
    DenseOperator,
    ModelParams,
    SpectralDecomposition,
    StateVector,
)

logger = logging.getLogger(__name__)

SINGLE_SPIN: Dict[str, NDArray[np.complex128]] = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # sigma^- = |down><up|
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}

ProductSpec = Sequence[Tuple[float, float]]

PRESETS = ("unpolarized", "polarized", "ground")


def _check_qubit(k: int, n_qubits: int) -> None:
    if not 1 <= k <= n_qubits:
        raise ParameterError("algebra", "qubit index out of range", details={"k": k, "n_qubits": n_qubits})


def build_pauli(k: int, axis: str, params: ModelParams) -> DenseOperator:
    """
    Embed a single-spin operator at qubit slot ``k``.

    Parameters
    ----------
    k : int
        1-based qubit index.
    axis : str
        One of "x", "y", "z" or "minus".
    params : ModelParams
        Supplies the qubit count N.

    Returns
    -------
    numpy.ndarray
        I ⊗ ... ⊗ sigma_axis ⊗ ... ⊗ I of shape (2^N, 2^N).

    Raises
    ------
    ParameterError
        If ``k`` is out of range or ``axis`` is unknown.
    """
    _check_qubit(k, params.n_qubits)
    if axis not in SINGLE_SPIN:
        raise ParameterError("algebra", f"unknown Pauli axis '{axis}'", details={"axis": axis})
    return _embed(k, axis, params.n_qubits).copy()


@lru_cache(maxsize=256)
def _embed(k: int, axis: str, n_qubits: int) -> DenseOperator:
    left = np.eye(2 ** (k - 1), dtype=complex)
    right = np.eye(2 ** (n_qubits - k), dtype=complex)
    op = np.kron(np.kron(left, SINGLE_SPIN[axis]), right)
    op.setflags(write=False)
    return op


def flip_permutation(k: int, n_qubits: int) -> NDArray[np.intp]:
    """
    Index permutation implementing sigma^x_k.

    sigma^x_k maps basis index i to i XOR (bit of qubit k), so
    (sigma^x_k rho sigma^x_k)[i, j] = rho[p[i], p[j]].
    """
    _check_qubit(k, n_qubits)
    mask = 1 << (n_qubits - k)
    return np.arange(2**n_qubits) ^ mask


def z_signs(n_qubits: int) -> NDArray[np.float64]:
    """Diagonal of sigma^z_k for every qubit, shape (N, 2^N)."""
    idx = np.arange(2**n_qubits)
    bits = (idx[None, :] >> (n_qubits - 1 - np.arange(n_qubits))[:, None]) & 1
    return 1.0 - 2.0 * bits


def build_ising_hamiltonian(params: ModelParams) -> DenseOperator:
    """
    Build H_s for the all-to-all coupled Ising model.

    The coupling prefactor is lambda/N; the result is Hermitian of shape (2^N, 2^N).
    """
    return _ising_hamiltonian(params.n_qubits, params.epsilon, params.lambda_).copy()


@lru_cache(maxsize=32)
def _ising_hamiltonian(n_qubits: int, epsilon: float, lambda_: float) -> DenseOperator:
    dim = 2**n_qubits
    signs = z_signs(n_qubits)
    h = np.diag(-epsilon * signs.sum(axis=0)).astype(complex)
    if lambda_ != 0 and n_qubits > 1:
        idx = np.arange(dim)
        coupling = lambda_ / n_qubits
        for k in range(1, n_qubits + 1):
            for kp in range(k + 1, n_qubits + 1):
                mask = (1 << (n_qubits - k)) | (1 << (n_qubits - kp))
                h[idx, idx ^ mask] += coupling
    h.setflags(write=False)
    return h


def eigendecompose(h: DenseOperator) -> SpectralDecomposition:
    """
    Diagonalize a Hermitian operator with a deterministic eigenvector convention.

    Eigenvalues are ascending. Each eigenvector has its first non-negligible component
    made real and positive; degenerate eigenvalues are ordered by lexicographic comparison
    of the real parts of their eigenvectors.

    Raises
    ------
    ParameterError
        If ``h`` is not square or not Hermitian within 1e-10.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ParameterError("algebra", "operator must be square", details={"shape": str(h.shape)})
    deviation = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if deviation > HERMITIAN_TOL:
        raise ParameterError("algebra", "operator is not Hermitian", details={"max_deviation": deviation})

    omegas, vectors = np.linalg.eigh(h)
    for col in range(vectors.shape[1]):
        v = vectors[:, col]
        pivot = int(np.argmax(np.abs(v) > 1e-12))
        vectors[:, col] = v * (abs(v[pivot]) / v[pivot])

    order = list(range(len(omegas)))
    scale = max(1.0, float(np.max(np.abs(omegas)))) if omegas.size else 1.0
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and omegas[stop] - omegas[start] <= 1e-10 * scale:
            stop += 1
        if stop - start > 1:
            block = sorted(range(start, stop), key=lambda c: tuple(np.round(vectors[:, c].real, 12)))
            order[start:stop] = block
        start = stop

    return SpectralDecomposition(omegas=omegas[order].copy(), vectors=vectors[:, order].copy())


def build_product_state(
    spec: Union[str, ProductSpec],
    params: ModelParams,
) -> StateVector:
    """
    Build a normalized product state prod_k (sqrt(1-A^2)|up> + A e^{i phi}|down>)_k.

    Parameters
    ----------
    spec : str or sequence of (A, phi)
        Either one (A, phi) pair per qubit (a single pair is broadcast to all qubits), or
        one of the presets "unpolarized" (A=1/sqrt(2), phi=pi), "polarized" (A=0) or
        "ground" (|alpha=0> of H_s, not a product state).
    params : ModelParams
        Model parameters.

    Raises
    ------
    ParameterError
        If a preset is unknown or an amplitude/phase is out of range.
    """
    if isinstance(spec, str):
        if spec == "ground":
            return eigendecompose(build_ising_hamiltonian(params)).ground_state()
        if spec == "unpolarized":
            pairs: ProductSpec = [(1.0 / np.sqrt(2.0), np.pi)] * params.n_qubits
        elif spec == "polarized":
            pairs = [(0.0, 0.0)] * params.n_qubits
        else:
            raise ParameterError("algebra", f"unknown state preset '{spec}'", details={"presets": ", ".join(PRESETS)})
    else:
        pairs = list(spec)
        if len(pairs) == 1:
            pairs = pairs * params.n_qubits

    if len(pairs) != params.n_qubits:
        raise ParameterError("algebra", "one (A, phi) pair per qubit is required", details={"pairs": len(pairs)})

    psi = np.ones(1, dtype=complex)
    for amplitude, phase in pairs:
        if not 0.0 <= amplitude <= 1.0 or not 0.0 <= phase < 2 * np.pi:
            raise ParameterError("algebra", "amplitude must lie in [0, 1] and phase in [0, 2*pi)", details={"A": amplitude, "phi": phase})
        single = np.array([np.sqrt(1.0 - amplitude**2), amplitude * np.exp(1j * phase)], dtype=complex)
        psi = np.kron(psi, single)
    return psi / np.linalg.norm(psi)


def expectation(operator: DenseOperator, psi: StateVector) -> complex:
    """Return <psi|operator|psi>."""
    return complex(np.vdot(psi, operator @ psi))
