"""
Base solver class for all density-matrix solvers.
"""

import logging
from typing import Dict, Optional

import numpy as np

from .algebra import eigendecompose, build_ising_hamiltonian
from .structures import DensityMatrix, EvolutionGrid, EvolutionResult, ModelParams, SpectralDecomposition

logger = logging.getLogger(__name__)


class SolverBase:
    """Base class for solver handling."""

    name = "base"

    def __init__(self, params: ModelParams, grid: Optional[EvolutionGrid] = None) -> None:
        self.params = params
        self.grid = grid if grid is not None else EvolutionGrid.for_model(params)
        self._spectrum: Optional[SpectralDecomposition] = None

    @property
    def spectrum(self) -> SpectralDecomposition:
        """Eigendecomposition of H_s, computed on first use."""
        if self._spectrum is None:
            self._spectrum = eigendecompose(build_ising_hamiltonian(self.params))
        return self._spectrum

    def max_bohr_frequency(self) -> float:
        """Largest transition frequency |omega_alpha - omega_alpha'|."""
        omegas = self.spectrum.omegas
        return float(omegas[-1] - omegas[0])

    def rhs(self, t: float, rho: DensityMatrix) -> DensityMatrix:
        """Time derivative of the density matrix."""
        raise NotImplementedError

    def evolve(self, rho0: DensityMatrix, keep_states: bool = False) -> EvolutionResult:
        """Integrate from ``rho0`` over the grid and return sampled observables."""
        raise NotImplementedError

    def get_info(self) -> Dict[str, float]:
        """
        Retrieve solver-specific information such as the grid, substep count and model
        parameters, for run manifests and logs.
        """
        return {
            "n_qubits": self.params.n_qubits,
            "epsilon": self.params.epsilon,
            "lambda": self.params.lambda_,
            "gamma": self.params.gamma,
            "dt": self.grid.dt,
            "t_max": self.grid.t_max,
        }

    @staticmethod
    def hermitize(rho: DensityMatrix) -> DensityMatrix:
        """Return (rho + rho^dagger) / 2."""
        return 0.5 * (rho + rho.conj().T)

    @staticmethod
    def min_eigenvalue(rho: DensityMatrix) -> float:
        return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
