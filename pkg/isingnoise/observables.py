"""
Scalar functionals of states and sampled series: magnetization, metastable value,
ground-state weight and lifetime, von Neumann entropy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .algebra import z_signs
from .exceptions import NumericalError, ParameterError
from .structures import DensityMatrix, ModelParams, ObservableSeries, SpectralDecomposition

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-10
CLAMP_TOL = -1e-8
CLAMP_WEIGHT_LIMIT = 1e-6
BOUND_TOL = 1e-6


@dataclass(frozen=True)
class LifetimeEstimate:
    """1/e crossing time of w(t); ``censored`` means no crossing before the series ended."""

    value: float
    censored: bool


def _real(value: complex, name: str) -> float:
    if abs(value.imag) > IMAG_TOL:
        logger.debug("Discarding imaginary residue %.3g of %s", value.imag, name)
    return float(value.real)


def magnetization(rho: DensityMatrix, params: ModelParams) -> float:
    """m = N^-1 sum_k Tr(sigma^z_k rho)."""
    if rho.shape != (params.dim, params.dim):
        raise ParameterError("observables", "density matrix dimension mismatch", details={"expected": params.dim})
    weights = z_signs(params.n_qubits).sum(axis=0) / params.n_qubits
    return _real(complex(np.dot(weights, np.diag(rho))), "magnetization")


def qubit_polarizations(rho: DensityMatrix, params: ModelParams) -> np.ndarray:
    """<sigma^z_k> for k = 1..N."""
    return (z_signs(params.n_qubits) @ np.diag(rho)).real


def metastable_value(series: ObservableSeries, t_max: float) -> float:
    """
    m^ms = m(t_max), read at the grid point nearest t_max.

    Raises
    ------
    ParameterError
        If the series ends before t_max (beyond half a grid step).
    """
    if series.times.size == 0:
        raise ParameterError("observables", "series is empty", details={"name": series.name})
    step = float(series.times[1] - series.times[0]) if series.times.size > 1 else 0.0
    if series.times[-1] < t_max - 0.5 * step - 1e-12:
        raise ParameterError("observables", "series ends before t_max", details={"t_end": float(series.times[-1]), "t_max": t_max})
    index = int(np.argmin(np.abs(series.times - t_max)))
    return float(series.values[index])


def ground_state_weight(rho: DensityMatrix, spec: SpectralDecomposition) -> float:
    """w = <alpha=0| rho |alpha=0>."""
    if rho.shape != (spec.dim, spec.dim):
        raise ParameterError("observables", "basis dimension mismatch", details={"rho": rho.shape[0], "spectrum": spec.dim})
    ground = spec.vectors[:, 0]
    return _real(complex(np.vdot(ground, rho @ ground)), "ground-state weight")


def ground_state_lifetime(series: ObservableSeries) -> LifetimeEstimate:
    """
    Time at which w(t) first drops to 1/e, by linear interpolation between grid points.

    A series that never crosses 1/e is reported as censored at its last time.

    Raises
    ------
    ParameterError
        If the series starts below 1/e.
    """
    threshold = math.exp(-1.0)
    values, times = series.values, series.times
    if values.size == 0 or values[0] < threshold:
        raise ParameterError("observables", "ground-state weight must start above 1/e", details={"name": series.name})
    below = np.nonzero(values < threshold)[0]
    if below.size == 0:
        return LifetimeEstimate(value=float(times[-1]), censored=True)
    i = int(below[0])
    t0, t1, w0, w1 = times[i - 1], times[i], values[i - 1], values[i]
    return LifetimeEstimate(value=float(t0 + (w0 - threshold) * (t1 - t0) / (w0 - w1)), censored=False)


def von_neumann_entropy(rho: DensityMatrix, strict: bool = False) -> float:
    """
    S = -Tr(rho ln rho) from the eigenvalues of the Hermitian part of ``rho``.

    Eigenvalues below zero are clamped; a clamped weight beyond 1e-6 is logged, or raised
    with ``strict``.

    Raises
    ------
    NumericalError
        With ``strict``, if the clamped weight exceeds 1e-6.
    """
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    negative = eigs[eigs < 0]
    clamped = float(-negative.sum())
    if eigs[0] < CLAMP_TOL:
        logger.debug("Clamping eigenvalues down to %.3g (weight %.3g)", eigs[0], clamped)
    if clamped > CLAMP_WEIGHT_LIMIT:
        if strict:
            raise NumericalError("observables", "entropy clamping exceeds tolerance", details={"clamped_weight": clamped})
        logger.warning("Entropy clamped a negative weight of %.3g; the state is not positive", clamped)
    p = eigs[eigs > 0]
    return float(-np.sum(p * np.log(p)))


def sample_observables(
    rho: DensityMatrix,
    params: ModelParams,
    spec: Optional[SpectralDecomposition] = None,
    track_entropy: bool = False,
) -> Dict[str, float]:
    """
    Evaluate the per-sample observables and assert their physical bounds.

    Returns ``m``, ``trace_err`` and ``min_eig`` always, ``w`` when ``spec`` is given and
    ``entropy`` when requested.

    Raises
    ------
    NumericalError
        If |m| > 1, w outside [0, 1] or S outside [0, N ln 2] beyond 1e-6.
    """
    values: Dict[str, float] = {
        "m": magnetization(rho, params),
        "trace_err": float(abs(np.trace(rho) - 1.0)),
        "min_eig": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]),
    }
    if abs(values["m"]) > 1.0 + BOUND_TOL:
        raise NumericalError("observables", "magnetization outside [-1, 1]", details={"m": values["m"]})
    if spec is not None:
        w = ground_state_weight(rho, spec)
        if not -BOUND_TOL <= w <= 1.0 + BOUND_TOL:
            raise NumericalError("observables", "ground-state weight outside [0, 1]", details={"w": w})
        values["w"] = w
    if track_entropy:
        s = von_neumann_entropy(rho)
        if not -BOUND_TOL <= s <= params.n_qubits * math.log(2.0) + BOUND_TOL:
            raise NumericalError("observables", "entropy outside [0, N ln 2]", details={"entropy": s})
        values["entropy"] = s
    return values
