"""
Markovian (white-noise) dynamics.

The Lindblad generator
    L(rho) = -i [H_s, rho] + Gamma * sum_k (sx_k rho sx_k - rho)
is integrated with fixed-step RK4. Since (sx_k)^2 = I, the dissipator reduces to bit-flip
permutations of rho, applied by fancy indexing. The module also holds the mean-field
equations obtained by neglecting interspin correlations.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from .algebra import build_ising_hamiltonian, flip_permutation
from .exceptions import NumericalError, ParameterError
from .integrators import choose_substeps, rk4_step
from .observables import sample_observables
from .solver_base import SolverBase
from .structures import (
    DenseOperator,
    DensityMatrix,
    EvolutionGrid,
    EvolutionResult,
    MeanFieldState,
    ModelParams,
)

logger = logging.getLogger(__name__)

TRACE_DRIFT_LIMIT = 1e-6
POSITIVITY_LIMIT = -1e-7


class LindbladGenerator:
    """
    Action of the Markovian generator on an arbitrary 2^N x 2^N matrix.

    Valid for non-Hermitian inputs too, as needed by the regression theorem.
    """

    def __init__(self, params: ModelParams) -> None:
        self.params = params
        self.hamiltonian: DenseOperator = build_ising_hamiltonian(params)
        self.flips: List[NDArray[np.intp]] = [flip_permutation(k, params.n_qubits) for k in range(1, params.n_qubits + 1)]

    def apply(self, x: DenseOperator) -> DenseOperator:
        if x.shape != self.hamiltonian.shape:
            raise ParameterError("markovian", "dimension mismatch with model", details={"expected": self.params.dim, "got": x.shape[0]})
        out = -1j * (self.hamiltonian @ x - x @ self.hamiltonian)
        if self.params.gamma:
            flipped = np.zeros_like(x)
            for p in self.flips:
                flipped += x[p][:, p]
            out += self.params.gamma * (flipped - self.params.n_qubits * x)
        return out

    def adjoint_apply(self, x: DenseOperator) -> DenseOperator:
        """Heisenberg-picture generator L^dagger(x) = i [H_s, x] + Gamma sum_k (sx_k x sx_k - x)."""
        out = 1j * (self.hamiltonian @ x - x @ self.hamiltonian)
        if self.params.gamma:
            flipped = np.zeros_like(x)
            for p in self.flips:
                flipped += x[p][:, p]
            out += self.params.gamma * (flipped - self.params.n_qubits * x)
        return out


@lru_cache(maxsize=16)
def _generator(params: ModelParams) -> LindbladGenerator:
    return LindbladGenerator(params)


def lindblad_rhs(rho: DensityMatrix, params: ModelParams) -> DensityMatrix:
    """
    Right-hand side of the Lindblad master equation.

    Raises
    ------
    ParameterError
        If ``rho`` does not match the model dimension.
    """
    return _generator(params).apply(np.asarray(rho, dtype=complex))


class MarkovianSolver(SolverBase):
    """
    Fixed-step RK4 integrator of the Lindblad equation.

    Hermiticity is re-imposed after every step; the trace is not renormalized so that its
    drift remains a diagnostic.
    """

    name = "markovian"

    def __init__(
        self,
        params: ModelParams,
        grid: Optional[EvolutionGrid] = None,
        max_phase_step: float = 0.1,
        track_ground_state: bool = False,
        track_entropy: bool = False,
    ) -> None:
        super().__init__(params, grid)
        self.generator = _generator(params)
        self.max_phase_step = max_phase_step
        self.track_ground_state = track_ground_state
        self.track_entropy = track_entropy
        self.substeps = self.grid.substeps or choose_substeps(
            self.grid.dt, self.max_bohr_frequency(), 2.0 * params.n_qubits * params.gamma, max_phase_step
        )

    def rhs(self, t: float, rho: DensityMatrix) -> DensityMatrix:
        return self.generator.apply(rho)

    def get_info(self) -> Dict[str, float]:
        info = super().get_info()
        info["substeps"] = self.substeps
        return info

    def _sample(self, rho: DensityMatrix) -> Dict[str, float]:
        values = sample_observables(
            rho,
            self.params,
            spec=self.spectrum if self.track_ground_state else None,
            track_entropy=self.track_entropy,
        )
        if values["trace_err"] > TRACE_DRIFT_LIMIT:
            raise NumericalError(
                self.name,
                "trace drift exceeds tolerance; reduce dt or max_phase_step",
                details={"trace_err": values["trace_err"], "dt": self.grid.dt, "substeps": self.substeps},
            )
        if values["min_eig"] < POSITIVITY_LIMIT:
            raise NumericalError(
                self.name,
                "density matrix lost positivity; reduce dt or max_phase_step",
                details={"min_eig": values["min_eig"], "dt": self.grid.dt, "substeps": self.substeps},
            )
        return values

    def evolve(self, rho0: DensityMatrix, keep_states: bool = False) -> EvolutionResult:
        """
        Integrate from ``rho0`` to t_max.

        Returns
        -------
        EvolutionResult
            Samples every ``sample_stride`` grid steps of m, trace_err, min_eig and, when
            tracked, w and entropy.

        Raises
        ------
        NumericalError
            If the trace drifts beyond 1e-6 or the minimum eigenvalue drops below -1e-7.
        """
        rho = self.hermitize(np.array(rho0, dtype=complex))
        h = self.grid.dt / self.substeps
        logger.debug("Markovian run: %d steps x %d substeps (h=%.3g)", self.grid.n_steps, self.substeps, h)

        records: List[Dict[str, float]] = [self._sample(rho)]
        states: List[DensityMatrix] = [rho.copy()] if keep_states else []
        t = 0.0
        for step in range(1, self.grid.n_steps + 1):
            for _ in range(self.substeps):
                rho = self.hermitize(rk4_step(self.rhs, t, rho, h))
                t += h
            if step % self.grid.sample_stride == 0:
                records.append(self._sample(rho))
                if keep_states:
                    states.append(rho.copy())

        series = {key: np.array([r[key] for r in records]) for key in records[0]}
        return EvolutionResult(times=self.grid.sample_times(), series=series, final_state=rho, states=states)


def evolve_markovian(
    rho0: DensityMatrix,
    params: ModelParams,
    grid: Optional[EvolutionGrid] = None,
    keep_states: bool = False,
    **options: float,
) -> EvolutionResult:
    """Convenience wrapper around :class:`MarkovianSolver`."""
    return MarkovianSolver(params, grid, **options).evolve(rho0, keep_states=keep_states)  # type: ignore[arg-type]


@dataclass
class MeanFieldSeries:
    """Sampled mean-field trajectory; ``states`` has columns (x, y, m)."""

    times: NDArray[np.float64]
    states: NDArray[np.float64]

    def final(self) -> MeanFieldState:
        x, y, m = (float(v) for v in self.states[-1])
        return MeanFieldState(x, y, m)


def mean_field_rhs(state: NDArray[np.float64], params: ModelParams) -> NDArray[np.float64]:
    """dx/dt = 2 eps y; dy/dt = -2 G y - 2 eps x - 2 lam x m; dm/dt = -2 G m + 2 lam x y."""
    x, y, m = state
    eps, lam, gam = params.epsilon, params.lambda_, params.gamma
    return np.array(
        [
            2.0 * eps * y,
            -2.0 * gam * y - 2.0 * eps * x - 2.0 * lam * x * m,
            -2.0 * gam * m + 2.0 * lam * x * y,
        ]
    )


def mean_field_evolve(state0: MeanFieldState, params: ModelParams, grid: EvolutionGrid) -> MeanFieldSeries:
    """RK4 integration of the three mean-field equations on ``grid``."""
    y = state0.as_array()
    samples = [y.copy()]
    h = grid.dt / (grid.substeps or 1)
    t = 0.0
    for step in range(1, grid.n_steps + 1):
        for _ in range(grid.substeps or 1):
            y = rk4_step(lambda _t, s: mean_field_rhs(s, params), t, y, h)
            t += h
        if step % grid.sample_stride == 0:
            samples.append(y.copy())
    return MeanFieldSeries(times=grid.sample_times(), states=np.array(samples))


def mean_field_fixed_point(params: ModelParams, resolution: int = 11) -> MeanFieldState:
    """
    Return the steady state (0, 0, 0) after checking it is the only real zero of the
    mean-field equations on a coarse Bloch-ball grid.

    Raises
    ------
    ParameterError
        If Gamma is not positive.
    NumericalError
        If the residual at the origin is non-zero or another grid point has a smaller one.
    """
    if not params.gamma > 0:
        raise ParameterError("mean-field", "a positive Gamma is required for a unique steady state", details={"gamma": params.gamma})
    origin = np.zeros(3)
    residual = float(np.linalg.norm(mean_field_rhs(origin, params)))
    if residual != 0.0:
        raise NumericalError("mean-field", "non-zero residual at the origin", details={"residual": residual})

    axis = np.linspace(-1.0, 1.0, resolution)
    grid = np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T
    grid = grid[np.einsum("ij,ij->i", grid, grid) <= 1.0 + 1e-12]
    norms = np.array([np.linalg.norm(mean_field_rhs(p, params)) for p in grid])
    others = norms[np.linalg.norm(grid, axis=1) > 0]
    if others.size and float(others.min()) <= residual:
        raise NumericalError("mean-field", "found a second zero of the mean-field equations")
    return MeanFieldState(0.0, 0.0, 0.0)
