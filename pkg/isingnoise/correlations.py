"""
Two-time spin correlations by the quantum regression theorem, and the spin power spectrum.

For a reference time t, Xi_k(0) = sz_k rho(t) is propagated with the Markovian generator
(valid for non-Hermitian matrices) and C(tau) = Tr[sz_k' Xi_k(tau)] is read off:
  C_a(tau) = N^-1 sum_k <sz_k(t + tau) sz_k(t)>
  C_c(tau) = [N(N-1)]^-1 sum_{k != k'} <sz_k'(t + tau) sz_k(t)>
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numpy.typing import NDArray
from scipy.signal import find_peaks, peak_widths

from .algebra import build_product_state, z_signs
from .exceptions import ParameterError
from .integrators import choose_substeps, rk4_step
from .liouvillian import build_liouvillian, liouvillian_spectrum, propagate_spectral
from .markovian_solver import LindbladGenerator
from .solver_base import SolverBase
from .structures import DenseOperator, DensityMatrix, ModelParams, pure_density_matrix

logger = logging.getLogger(__name__)

SETTLING_TIME = 3.0
IMAG_REPORT_TOL = 1e-8
METHODS = ("ode", "spectral")


@dataclass
class CorrelationSeries:
    """Auto (``c_a``) and cross (``c_c``) correlations on a uniform lag grid starting at 0."""

    taus: NDArray[np.float64]
    c_a: NDArray[np.float64]
    c_c: NDArray[np.float64]
    t_ref: float


@dataclass
class SpinSpectrum:
    """S_sigma(omega) on an fftshift-ordered angular-frequency grid."""

    omegas: NDArray[np.float64]
    values: NDArray[np.float64]


@dataclass
class SpinSpectrumSummary:
    """Central-peak width, detected side peaks and the predicted side-peak offset |lambda/4N - 2 eps|."""

    central_fwhm: float
    side_peaks: List[float] = field(default_factory=list)
    predicted_offset: float = 0.0


def _check_uniform(taus: NDArray[np.float64]) -> float:
    if taus.ndim != 1 or taus.size < 2 or abs(taus[0]) > 1e-12:
        raise ParameterError("correlations", "lag grid must start at 0 and hold at least two points")
    steps = np.diff(taus)
    dtau = float(steps[0])
    if dtau <= 0 or np.max(np.abs(steps - dtau)) > 1e-9 * max(dtau, 1.0):
        raise ParameterError("correlations", "lag grid must be uniform", details={"dtau": dtau})
    return dtau


def _ode_stepper(params: ModelParams, max_phase_step: float) -> Callable[[DenseOperator, float], DenseOperator]:
    generator = LindbladGenerator(params)
    bandwidth = SolverBase(params).max_bohr_frequency()

    def advance(x: DenseOperator, duration: float) -> DenseOperator:
        if duration <= 0:
            return x
        n = choose_substeps(duration, bandwidth, 2.0 * params.n_qubits * params.gamma, max_phase_step)
        h = duration / n
        for i in range(n):
            x = rk4_step(lambda _t, y: generator.apply(y), i * h, x, h)
        return x

    return advance


def two_time_correlation(
    params: ModelParams,
    t_ref: Optional[float] = None,
    tau_grid: Optional[NDArray[np.float64]] = None,
    rho0: Optional[DensityMatrix] = None,
    method: str = "ode",
    max_phase_step: float = 0.1,
) -> CorrelationSeries:
    """
    Auto and cross correlations of sz at reference time ``t_ref``.

    Parameters
    ----------
    params : ModelParams
        Model parameters (white noise).
    t_ref : float, optional
        Reference time; defaults to t_max / 2. Values below the 3/Gamma settling time are
        accepted with a warning.
    tau_grid : numpy.ndarray, optional
        Uniform lags starting at 0; defaults to 0..t_max in steps of 1/f0. The lags may run
        past t_max.
    rho0 : numpy.ndarray, optional
        Initial density matrix; defaults to the unpolarized product state.
    method : str
        "ode" (RK4 with the Lindblad generator) or "spectral" (Liouvillian eigenmodes).

    Raises
    ------
    ParameterError
        For an unknown method, a negative ``t_ref`` or a non-uniform lag grid.
    """
    if method not in METHODS:
        raise ParameterError("correlations", f"unknown method '{method}'", details={"methods": ", ".join(METHODS)})
    t_ref = params.t_max / 2.0 if t_ref is None else float(t_ref)
    if t_ref < 0:
        raise ParameterError("correlations", "reference time must be non-negative", details={"t_ref": t_ref})
    if t_ref < SETTLING_TIME / max(params.gamma, 1e-300):
        logger.warning("Reference time %.3g is below the settling time %.3g", t_ref, SETTLING_TIME / max(params.gamma, 1e-300))
    taus = np.arange(0.0, params.t_max + 0.5 * params.noise_dt, params.noise_dt) if tau_grid is None else np.asarray(tau_grid, float)
    dtau = _check_uniform(taus)
    rho = pure_density_matrix(build_product_state("unpolarized", params)) if rho0 is None else np.asarray(rho0, dtype=complex)

    if method == "spectral":
        spec = liouvillian_spectrum(build_liouvillian(params))
        rho = propagate_spectral(rho, spec, t_ref)

        def advance(x: DenseOperator, duration: float) -> DenseOperator:
            return propagate_spectral(x, spec, duration)

    else:
        advance = _ode_stepper(params, max_phase_step)
        rho = advance(rho, t_ref)

    n = params.n_qubits
    signs = z_signs(n)
    total = signs.sum(axis=0)
    auto = np.zeros(taus.size, dtype=complex)
    cross = np.zeros(taus.size, dtype=complex)
    for k in range(n):
        xi = signs[k][:, None] * rho
        for i in range(taus.size):
            if i:
                xi = advance(xi, dtau)
            diag = np.diag(xi)
            auto[i] += np.dot(signs[k], diag)
            cross[i] += np.dot(total - signs[k], diag)

    auto /= n
    if n > 1:
        cross /= n * (n - 1)
    else:
        logger.info("Cross correlation undefined for a single qubit; reporting zeros")
    residue = float(max(np.max(np.abs(auto.imag)), np.max(np.abs(cross.imag))))
    if residue > IMAG_REPORT_TOL:
        logger.debug("Largest imaginary part of the correlations: %.3g", residue)
    return CorrelationSeries(taus=taus, c_a=auto.real.copy(), c_c=cross.real.copy(), t_ref=t_ref)


def spin_psd(taus: NDArray[np.float64], c_a: NDArray[np.float64]) -> SpinSpectrum:
    """
    S_sigma(omega) = integral of C_a(tau) exp(-i omega tau) over all tau.

    The negative lags use C_a(-tau) = conj(C_a(tau)), so the transform is real.

    Raises
    ------
    ParameterError
        If the lag grid is not uniform from 0 or lengths differ.
    """
    taus = np.asarray(taus, dtype=float)
    c_a = np.asarray(c_a)
    if taus.shape != c_a.shape:
        raise ParameterError("correlations", "lags and correlation values must have equal lengths")
    dtau = _check_uniform(taus)
    full = np.concatenate((np.conj(c_a[:0:-1]), c_a))
    spectrum = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(full))) * dtau
    peak = float(np.max(np.abs(spectrum.real))) or 1.0
    if float(np.max(np.abs(spectrum.imag))) / peak > IMAG_REPORT_TOL:
        logger.debug("Spin PSD imaginary residue %.3g", float(np.max(np.abs(spectrum.imag))) / peak)
    omegas = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(full.size, d=dtau))
    return SpinSpectrum(omegas=omegas, values=spectrum.real.copy())


def analyze_spin_spectrum(psd: SpinSpectrum, params: ModelParams, rel_prominence: float = 1e-3) -> SpinSpectrumSummary:
    """
    Measure the FWHM of the peak at omega = 0 and locate the other local maxima.

    Side peaks must reach ``rel_prominence`` of the central height.
    """
    values = psd.values
    centre = int(np.argmin(np.abs(psd.omegas)))
    widths, _, _, _ = peak_widths(values, [centre], rel_height=0.5)
    d_omega = float(psd.omegas[1] - psd.omegas[0])
    peaks, _ = find_peaks(values, prominence=rel_prominence * float(values[centre]))
    side = [float(psd.omegas[p]) for p in peaks if p != centre]
    return SpinSpectrumSummary(
        central_fwhm=float(widths[0]) * d_omega,
        side_peaks=side,
        predicted_offset=abs(params.lambda_ / (4.0 * params.n_qubits) - 2.0 * params.epsilon),
    )
