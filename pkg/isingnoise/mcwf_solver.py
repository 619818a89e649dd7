"""
Monte Carlo wave-function unraveling of the white-noise master equation.

The jump operators sqrt(Gamma) sx_k satisfy (sx_k)^2 = I, so the non-Hermitian part of the
effective Hamiltonian is -i (N Gamma / 2) I. The no-jump norm therefore decays as
exp(-N Gamma t) independently of the state: jump times form a Poisson process of rate
N Gamma and the channel k is uniform. Both are drawn up front; the coherent segments
between them are pure Schroedinger evolution under H_s.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.stats import kstest

from .algebra import build_ising_hamiltonian, eigendecompose, flip_permutation, z_signs
from .config import resolve_worker_count
from .exceptions import NumericalError, ParameterError
from .integrators import choose_substeps, rk4_propagator
from .noise import derive_seed
from .structures import EvolutionGrid, ModelParams, StateVector, validate_state_vector

logger = logging.getLogger(__name__)

NORM_DRIFT_LIMIT = 1e-8
RK4_PHASE_STEP = 0.02
METHODS = ("exact", "rk4")
RAISING = "raising"
LOWERING = "lowering"


@dataclass(frozen=True)
class JumpEvent:
    """
    One quantum jump.

    ``direction`` is "raising" when <sz_qubit> increases across the jump and "lowering"
    otherwise; ``qubit`` is 1-based.
    """

    time: float
    qubit: int
    direction: str


@dataclass
class TrajectoryRecord:
    """
    One MCWF realization.

    ``polarizations`` has one row per sample time and one column per qubit (<sz_k>);
    ``m`` is their mean over qubits.
    """

    seed: int
    jumps: List[JumpEvent]
    times: NDArray[np.float64]
    polarizations: NDArray[np.float64]
    m: NDArray[np.float64]
    final_state: StateVector = field(repr=False, default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def m_ms(self) -> float:
        """Metastable value m(t_max)."""
        return float(self.m[-1])

    @property
    def n_jumps_up(self) -> int:
        return sum(1 for j in self.jumps if j.direction == RAISING)

    @property
    def n_jumps_down(self) -> int:
        return sum(1 for j in self.jumps if j.direction == LOWERING)


@dataclass
class EnsembleSummary:
    """Pointwise ensemble mean of m(t) with standard errors and the m_ms distribution."""

    times: NDArray[np.float64]
    mean: NDArray[np.float64]
    stderr: NDArray[np.float64]
    m_ms_mean: float
    m_ms_std: float
    histogram: NDArray[np.int64]
    bin_edges: NDArray[np.float64]


class _CoherentPropagator:
    """Schroedinger evolution under H_s between jumps."""

    def __init__(self, params: ModelParams, grid: EvolutionGrid, method: str) -> None:
        if method not in METHODS:
            raise ParameterError("mcwf", f"unknown propagation method '{method}'", details={"methods": ", ".join(METHODS)})
        self.method = method
        self.spectrum = eigendecompose(build_ising_hamiltonian(params))
        interval = grid.dt * grid.sample_stride
        if method == "exact":
            self.interval_step = self._exact(interval)
        else:
            bandwidth = float(self.spectrum.omegas[-1] - self.spectrum.omegas[0])
            self.substeps = grid.substeps or choose_substeps(grid.dt, bandwidth, 0.0, RK4_PHASE_STEP)
            self.h = grid.dt / self.substeps
            self.generator = -1j * build_ising_hamiltonian(params)
            self.step = rk4_propagator(self.generator, self.h)
            self.interval_step = np.linalg.matrix_power(self.step, self.substeps * grid.sample_stride)

    def _exact(self, duration: float) -> NDArray[np.complex128]:
        v = self.spectrum.vectors
        return (v * np.exp(-1j * self.spectrum.omegas * duration)) @ v.conj().T

    def advance(self, psi: StateVector, duration: float) -> StateVector:
        """Propagate over an arbitrary duration (used around jumps)."""
        if duration <= 0:
            return psi
        if self.method == "exact":
            v = self.spectrum.vectors
            return v @ (np.exp(-1j * self.spectrum.omegas * duration) * (v.conj().T @ psi))
        n_full = int(duration // self.h)
        for _ in range(n_full):
            psi = self.step @ psi
        remainder = duration - n_full * self.h
        if remainder > 1e-15:
            psi = rk4_propagator(self.generator, remainder) @ psi
        return psi


def _renormalize(psi: StateVector, t: float) -> StateVector:
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > NORM_DRIFT_LIMIT:
        raise NumericalError("mcwf", "norm drift in a coherent segment", details={"norm": norm, "time": t})
    return psi / norm


def draw_jump_schedule(params: ModelParams, t_max: float, rng: np.random.Generator) -> List[Tuple[float, int]]:
    """Poisson jump times of rate N*Gamma on [0, t_max] with uniform 1-based channels."""
    rate = params.n_qubits * params.gamma
    if rate <= 0:
        return []
    times: List[float] = []
    t = rng.exponential(1.0 / rate)
    while t <= t_max:
        times.append(float(t))
        t += rng.exponential(1.0 / rate)
    channels = rng.integers(1, params.n_qubits + 1, size=len(times))
    return list(zip(times, (int(c) for c in channels)))


def run_trajectory(
    psi0: StateVector,
    params: ModelParams,
    grid: Optional[EvolutionGrid] = None,
    seed: int = 0,
    method: str = "exact",
) -> TrajectoryRecord:
    """
    Run one MCWF trajectory.

    Parameters
    ----------
    psi0 : numpy.ndarray
        Normalized initial state.
    params : ModelParams
        Model parameters.
    grid : EvolutionGrid, optional
        Sampling grid; defaults to the noise grid of ``params``.
    seed : int
        Seed of this trajectory's generator.
    method : str
        Coherent propagator between jumps. The default "exact" uses the spectral
        exponential of H_eff; "rk4" uses the fourth-order polynomial step with the
        configured phase limit. Both keep the same jump schedule for a given seed.

    Raises
    ------
    ParameterError
        If ``psi0`` is not a normalized state of the model.
    NumericalError
        If the norm drifts by more than 1e-8 within a coherent segment.
    """
    psi = validate_state_vector(psi0, params)
    grid = grid if grid is not None else EvolutionGrid.for_model(params)
    propagator = _CoherentPropagator(params, grid, method)
    rng = np.random.default_rng(seed)
    schedule = draw_jump_schedule(params, grid.t_max, rng)

    signs = z_signs(params.n_qubits)
    flips = {k: flip_permutation(k, params.n_qubits) for k in range(1, params.n_qubits + 1)}
    times = grid.sample_times()
    pols = np.empty((len(times), params.n_qubits))
    pols[0] = signs @ np.abs(psi) ** 2
    jumps: List[JumpEvent] = []

    t = 0.0
    pending = 0
    for i in range(1, len(times)):
        t_next = float(times[i])
        while pending < len(schedule) and schedule[pending][0] <= t_next:
            t_jump, k = schedule[pending]
            psi = _renormalize(propagator.advance(psi, t_jump - t), t_jump)
            before = float(signs[k - 1] @ np.abs(psi) ** 2)
            psi = psi[flips[k]]
            # sx_k maps <sz_k> to -<sz_k>, so the change is -2 * before
            jumps.append(JumpEvent(time=t_jump, qubit=k, direction=RAISING if before < 0 else LOWERING))
            t = t_jump
            pending += 1
        if t == float(times[i - 1]):
            psi = propagator.interval_step @ psi
        else:
            psi = propagator.advance(psi, t_next - t)
        psi = _renormalize(psi, t_next)
        t = t_next
        pols[i] = signs @ np.abs(psi) ** 2

    logger.debug("Trajectory seed=%d: %d jumps", seed, len(jumps))
    return TrajectoryRecord(seed=seed, jumps=jumps, times=times, polarizations=pols, m=pols.mean(axis=1), final_state=psi)


def run_ensemble(
    psi0: StateVector,
    params: ModelParams,
    n_trajectories: int,
    master_seed: int,
    grid: Optional[EvolutionGrid] = None,
    method: str = "exact",
    max_workers: Optional[int] = None,
) -> List[TrajectoryRecord]:
    """
    Run ``n_trajectories`` independent trajectories on a thread pool.

    Trajectory i uses the seed derived from (master_seed, i); results are returned in index
    order, so a replay with the same master seed is bit-identical.
    ``method`` is passed to every trajectory and defaults to "exact", as in
    :func:`run_trajectory`.
    """
    if n_trajectories < 1:
        raise ParameterError("mcwf", "at least one trajectory is required", details={"trajectories": n_trajectories})
    grid = grid if grid is not None else EvolutionGrid.for_model(params)
    seeds = [derive_seed(master_seed, i) for i in range(n_trajectories)]
    workers = resolve_worker_count(n_trajectories, max_workers)
    logger.info("Running %d trajectories on %d workers", n_trajectories, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run_trajectory(psi0, params, grid, s, method), seeds))


def ensemble_average(
    records: Sequence[TrajectoryRecord],
    bins: int = 21,
    value_range: Tuple[float, float] = (-1.0, 1.0),
) -> EnsembleSummary:
    """
    Pointwise mean and standard error of m(t) and the distribution of m_ms.

    Raises
    ------
    ParameterError
        If fewer than two records are given or their sample grids differ.
    """
    if len(records) < 2:
        raise ParameterError("mcwf", "at least two trajectories are required", details={"records": len(records)})
    times = records[0].times
    for r in records[1:]:
        if r.times.shape != times.shape or not np.array_equal(r.times, times):
            raise ParameterError("mcwf", "trajectories do not share a sample grid", details={"seed": r.seed})
    stack = np.array([r.m for r in records])
    m_ms = stack[:, -1]
    counts, edges = np.histogram(m_ms, bins=bins, range=value_range)
    return EnsembleSummary(
        times=times,
        mean=stack.mean(axis=0),
        stderr=stack.std(axis=0, ddof=1) / np.sqrt(len(records)),
        m_ms_mean=float(m_ms.mean()),
        m_ms_std=float(m_ms.std(ddof=1)),
        histogram=counts,
        bin_edges=edges,
    )


def inter_jump_intervals(records: Sequence[TrajectoryRecord]) -> NDArray[np.float64]:
    """Waiting times between consecutive jumps, the first measured from t = 0."""
    intervals = [np.diff(np.concatenate(([0.0], [j.time for j in r.jumps]))) for r in records]
    return np.concatenate(intervals) if intervals else np.zeros(0)


def jump_counts(records: Sequence[TrajectoryRecord], window: Optional[Tuple[float, float]] = None) -> Dict[str, int]:
    """Raising and lowering event counts, optionally restricted to ``window``."""
    lo, hi = window if window is not None else (-np.inf, np.inf)
    counts = {RAISING: 0, LOWERING: 0}
    for r in records:
        for j in r.jumps:
            if lo <= j.time <= hi:
                counts[j.direction] += 1
    return counts


def waiting_time_test(records: Sequence[TrajectoryRecord], params: ModelParams) -> Tuple[float, float]:
    """
    Kolmogorov-Smirnov test of the waiting times against Exp(N*Gamma).

    Returns
    -------
    tuple of float
        The KS statistic and its p-value.
    """
    intervals = inter_jump_intervals(records)
    if intervals.size < 2:
        raise ParameterError("mcwf", "too few jumps for a waiting-time test", details={"jumps": int(intervals.size)})
    result = kstest(intervals, "expon", args=(0.0, 1.0 / (params.n_qubits * params.gamma)))
    return float(result.statistic), float(result.pvalue)
