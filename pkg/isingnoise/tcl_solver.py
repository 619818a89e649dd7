"""
Time-convolutionless (second-order) master equation for colored noise.

In the eigenbasis of H_s the equation reads

    d rho / dt = -i [Omega, rho] - (Gamma / 2) sum_k [X_k, [B_k(t), rho]],

with X_k = V^dagger sx_k V and B_k(t) = X_k o K(t) (element-wise), where

    K^{aa'}(t) = int_0^t kappa(tau) exp(-i (w_a - w_a') tau) d tau.

The kernel is shared by all qubits (i.i.d. fields) and is extended by one trapezoid panel per
noise-grid step. For the white kernel K = 1 and the equation is the Lindblad equation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from .algebra import build_pauli
from .exceptions import NumericalError, ParameterError
from .integrators import choose_substeps, rk4_step
from .noise import CorrelationKernel, analytic_kernel, derive_seed, estimate_correlation, generate_field
from .observables import sample_observables
from .solver_base import SolverBase
from .structures import DenseOperator, DensityMatrix, EvolutionGrid, EvolutionResult, ModelParams, SpectralDecomposition

logger = logging.getLogger(__name__)

TRACE_DRIFT_LIMIT = 1e-6
HERMITICITY_LIMIT = 1e-8
POSITIVITY_REPORT = -1e-7
MIN_RECORD_FACTOR = 2.0
STRONG_NOISE_RATIO = 2.0
KERNEL_SOURCES = ("analytic", "sampled")
APPROXIMATIONS = ("full", "effective_rate")


@dataclass(frozen=True)
class KernelMatrix:
    """K^{aa'}(t) over eigenstate pairs at grid time ``t``."""

    t: float
    entries: NDArray[np.complex128]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


@dataclass(frozen=True)
class MemoryOperator:
    """B_k(t) = X_k o K(t) for every qubit, with the eigenbasis X_k and eigenfrequencies."""

    t: float
    b_k: List[DenseOperator]
    x_k: List[DenseOperator] = field(repr=False)
    omegas: NDArray[np.float64] = field(repr=False)


def _grid_index(t: float, dt: float) -> int:
    n = int(round(t / dt))
    if t < 0 or abs(t - n * dt) > 1e-9 * max(1.0, abs(t)):
        raise ParameterError("tcl", "time is not on the noise grid", details={"t": t, "dt": dt})
    return n


class KernelAccumulator:
    """
    Running trapezoid integral of kappa(tau) exp(-i dw tau) on the noise grid.

    The tau = 0 sample carries full weight for singular (sampled-noise) kernels and half
    weight otherwise. With ``phase_free`` every entry equals the enhancement factor.
    """

    def __init__(self, kernel: CorrelationKernel, spec: SpectralDecomposition, phase_free: bool = False) -> None:
        self.kernel = kernel
        self.dt = kernel.dt
        self.bohr = np.zeros((spec.dim, spec.dim)) if phase_free else spec.bohr_frequencies()
        self.step = 0
        self._start = (1.0 if kernel.singular else 0.5) * kernel.value(0) * self.dt
        self._interior = np.zeros((spec.dim, spec.dim), dtype=complex)
        initial = self._start if kernel.singular else 0.0
        self.current = KernelMatrix(t=0.0, entries=np.full((spec.dim, spec.dim), initial, dtype=complex))

    def _panel(self, j: int) -> NDArray[np.complex128]:
        return self.kernel.value(j) * np.exp(-1j * self.bohr * (j * self.dt)) * self.dt

    def advance(self) -> KernelMatrix:
        """Extend the integral by one grid step and return K at the new time."""
        n = self.step + 1
        if n >= 2:
            self._interior += self._panel(n - 1)
        entries = self._start + self._interior + 0.5 * self._panel(n)
        self.step = n
        self.current = KernelMatrix(t=n * self.dt, entries=entries)
        return self.current


def build_kernel_matrix(kernel: CorrelationKernel, spec: SpectralDecomposition, t: float) -> KernelMatrix:
    """
    K^{aa'}(t) by trapezoidal quadrature on the noise grid.

    Raises
    ------
    ParameterError
        If ``t`` is not a multiple of the kernel step.
    """
    n = _grid_index(t, kernel.dt)
    acc = KernelAccumulator(kernel, spec)
    for _ in range(n):
        acc.advance()
    return acc.current


def eigenbasis_flips(params: ModelParams, spec: SpectralDecomposition) -> List[DenseOperator]:
    """X_k = V^dagger sx_k V for k = 1..N."""
    return [spec.to_eigenbasis(build_pauli(k, "x", params)) for k in range(1, params.n_qubits + 1)]


def memory_operator(kmat: KernelMatrix, x_ops: List[DenseOperator], omegas: NDArray[np.float64]) -> MemoryOperator:
    return MemoryOperator(t=kmat.t, b_k=[x * kmat.entries for x in x_ops], x_k=x_ops, omegas=omegas)


def tcl_rhs(rho: DensityMatrix, t: float, memory: MemoryOperator, params: ModelParams) -> DensityMatrix:
    """
    -i [Omega, rho] - (Gamma/2) sum_k [X_k, [B_k(t), rho]] with ``rho`` in the eigenbasis.

    Raises
    ------
    ParameterError
        If ``rho`` and the memory operator live in different bases.
    """
    dim = memory.omegas.shape[0]
    if rho.shape != (dim, dim) or dim != params.dim or len(memory.b_k) != params.n_qubits:
        raise ParameterError("tcl", "basis mismatch between state and memory operator", details={"dim": dim, "rho": str(rho.shape)})
    w = memory.omegas
    out = -1j * (w[:, None] * rho - rho * w[None, :])
    for x, b in zip(memory.x_k, memory.b_k):
        inner = b @ rho - rho @ b
        out -= 0.5 * params.gamma * (x @ inner - inner @ x)
    return out


def effective_rate(kernel: CorrelationKernel, t: float, gamma: float = 1.0) -> float:
    """Gamma_eff(t) = Gamma * int_0^t kappa(tau) d tau."""
    return gamma * kernel.enhancement(_grid_index(t, kernel.dt))


def build_noise_kernel(
    params: ModelParams,
    alpha: float,
    source: str = "analytic",
    record_factor: float = 1.0,
    realizations: int = 100,
    seed: int = 0,
) -> CorrelationKernel:
    """
    Noise kernel for a run of length t_max.

    The record holds max(record_factor, 2) * t_max * f0 samples (rounded up to even), so all
    lags up to t_max lie in the first half of the circulant kernel.

    Raises
    ------
    ParameterError
        For an unknown source or fewer than two realizations in sampled mode.
    """
    if source not in KERNEL_SOURCES:
        raise ParameterError("tcl", f"unknown kernel source '{source}'", details={"sources": ", ".join(KERNEL_SOURCES)})
    n_samples = int(np.ceil(max(record_factor, MIN_RECORD_FACTOR) * params.t_max * params.f0 - 1e-9))
    n_samples += n_samples % 2
    if source == "analytic":
        return analytic_kernel(alpha, n_samples // 2, params.f0)
    if realizations < 2:
        raise ParameterError("tcl", "sampled kernels need at least two realizations", details={"realizations": realizations})
    fields = [generate_field(1, n_samples, alpha, derive_seed(seed, r), params.f0) for r in range(realizations)]
    logger.info("Estimated %s kernel from %d realizations", source, realizations)
    return estimate_correlation(fields, 1, 1)


class TclSolver(SolverBase):
    """
    RK4 integrator of the eigenbasis TCL equation.

    Kernels are refreshed once per noise-grid step and interpolated linearly inside it.
    Positivity is monitored, not enforced.
    """

    name = "tcl"

    def __init__(
        self,
        params: ModelParams,
        alpha: float = 0.0,
        grid: Optional[EvolutionGrid] = None,
        kernel: Optional[CorrelationKernel] = None,
        kernel_source: str = "analytic",
        approximation: str = "full",
        realizations: int = 100,
        seed: int = 0,
        record_factor: float = 1.0,
        max_phase_step: float = 0.1,
        allow_strong_noise: bool = False,
        track_ground_state: bool = False,
        track_entropy: bool = False,
    ) -> None:
        super().__init__(params, grid)
        if approximation not in APPROXIMATIONS:
            raise ParameterError("tcl", f"unknown approximation '{approximation}'", details={"approximations": ", ".join(APPROXIMATIONS)})
        if params.epsilon < STRONG_NOISE_RATIO * params.gamma and not allow_strong_noise:
            raise ParameterError(
                "tcl",
                "epsilon/Gamma < 2 lies outside the weak-noise regime; set allow_strong_noise to override",
                details={"epsilon": params.epsilon, "gamma": params.gamma},
            )
        self.alpha = alpha
        self.approximation = approximation
        self.kernel = kernel if kernel is not None else build_noise_kernel(params, alpha, kernel_source, record_factor, realizations, seed)
        if abs(self.grid.dt - self.kernel.dt) > 1e-12 * self.kernel.dt:
            raise ParameterError("tcl", "grid step must equal the noise sampling period", details={"dt": self.grid.dt, "noise_dt": self.kernel.dt})
        self.track_ground_state = track_ground_state
        self.track_entropy = track_entropy
        self.x_ops = eigenbasis_flips(params, self.spectrum)

        cumulative = float(np.abs(self.kernel.lags(self.grid.n_steps + 1)).sum() * self.kernel.dt)
        self.substeps = self.grid.substeps or choose_substeps(
            self.grid.dt, self.max_bohr_frequency(), 2.0 * params.n_qubits * params.gamma * cumulative, max_phase_step
        )
        logger.debug("TCL kernel: alpha=%g, cumulative |kappa| dt=%.3g, substeps=%d", alpha, cumulative, self.substeps)

    def get_info(self) -> Dict[str, float]:
        info = super().get_info()
        info.update({"alpha": self.alpha, "substeps": self.substeps})
        return info

    def _sample(self, rho_eig: DensityMatrix, step: int) -> Dict[str, float]:
        herm = float(np.max(np.abs(rho_eig - rho_eig.conj().T)))
        if herm > HERMITICITY_LIMIT:
            raise NumericalError(self.name, "Hermiticity lost", details={"max_deviation": herm, "step": step})
        rho = self.spectrum.from_eigenbasis(rho_eig)
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
                details={"trace_err": values["trace_err"], "step": step, "substeps": self.substeps},
            )
        if values["min_eig"] < POSITIVITY_REPORT:
            logger.debug("Negative eigenvalue %.3g at step %d", values["min_eig"], step)
        values["gamma_eff"] = self.params.gamma * self.kernel.enhancement(step)
        return values

    def evolve(self, rho0: DensityMatrix, keep_states: bool = False) -> EvolutionResult:
        """
        Integrate from ``rho0`` (product basis) to t_max.

        Returns
        -------
        EvolutionResult
            Product-basis samples of m, trace_err, min_eig, gamma_eff and the tracked
            observables; the final state is in the product basis.

        Raises
        ------
        NumericalError
            If the trace drifts beyond 1e-6 or Hermiticity is lost beyond 1e-8.
        """
        rho = self.spectrum.to_eigenbasis(np.asarray(rho0, dtype=complex))
        dt = self.grid.dt
        h = dt / self.substeps
        acc = KernelAccumulator(self.kernel, self.spectrum, phase_free=self.approximation == "effective_rate")
        b_prev = [x * acc.current.entries for x in self.x_ops]

        records = [self._sample(rho, 0)]
        states = [self.spectrum.from_eigenbasis(rho)] if keep_states else []
        for step in range(1, self.grid.n_steps + 1):
            k_next = acc.advance()
            b_next = [x * k_next.entries for x in self.x_ops]
            t0 = (step - 1) * dt

            def rhs(t: float, y: DensityMatrix) -> DensityMatrix:
                frac = (t - t0) / dt
                b = [bp + frac * (bn - bp) for bp, bn in zip(b_prev, b_next)]
                return tcl_rhs(y, t, MemoryOperator(t=t, b_k=b, x_k=self.x_ops, omegas=self.spectrum.omegas), self.params)

            for s in range(self.substeps):
                rho = rk4_step(rhs, t0 + s * h, rho, h)
            b_prev = b_next
            if step % self.grid.sample_stride == 0:
                records.append(self._sample(rho, step))
                if keep_states:
                    states.append(self.spectrum.from_eigenbasis(rho))

        lowest = min(r["min_eig"] for r in records)
        if lowest < POSITIVITY_REPORT:
            logger.warning("TCL run reached a negative eigenvalue of %.3g (not enforced)", lowest)
        series = {key: np.array([r[key] for r in records]) for key in records[0]}
        return EvolutionResult(times=self.grid.sample_times(), series=series, final_state=self.spectrum.from_eigenbasis(rho), states=states)


def evolve_nonmarkovian(
    rho0: DensityMatrix,
    params: ModelParams,
    alpha: float,
    grid: Optional[EvolutionGrid] = None,
    keep_states: bool = False,
    **options: object,
) -> EvolutionResult:
    """Convenience wrapper around :class:`TclSolver`."""
    return TclSolver(params, alpha, grid, **options).evolve(rho0, keep_states=keep_states)  # type: ignore[arg-type]
