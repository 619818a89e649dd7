"""
Superconducting-circuit to model-parameter mapping.

This is the only module working in SI units. It converts Cooper-pair-box capacitances and
Josephson energy into the Ising parameters (epsilon, lambda) and converts gate-charge
fluctuations into the reduced-unit noise fields eta_k(t) together with the intensity Gamma.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.signal import welch

from .exceptions import NumericalError, ParameterError
from .structures import ModelParams

logger = logging.getLogger(__name__)

# Physical constants
CONSTANTS: Dict[str, float] = {
    "two_e": 3.204353e-19,  # C
    "hbar": 1.054572e-34,  # J s
}

# E_J is expected to be well below E_C for the two-state approximation
CHARGING_HIERARCHY_RATIO = 0.1

CIRCUIT_CSV_HEADER = ("c_g", "c_j", "c_c", "e_j", "n_qubits")


@dataclass(frozen=True)
class CircuitParams:
    """
    Cooper-pair-box array parameters.

    Units:
      - c_g, c_j, c_c: farads (c_c = 0 describes uncoupled boxes).
      - e_j: joules.
    """

    c_g: float
    c_j: float
    c_c: float
    e_j: float
    n_qubits: int

    def __post_init__(self) -> None:
        details = {"c_g": self.c_g, "c_j": self.c_j, "c_c": self.c_c, "e_j": self.e_j}
        if not (self.c_g > 0 and self.c_j > 0) or self.c_c < 0:
            raise ParameterError("circuit", "capacitances must be positive", details=details)
        if not self.e_j > 0:
            raise ParameterError("circuit", "Josephson energy must be positive", details=details)
        if self.n_qubits < 1:
            raise ParameterError("circuit", "n_qubits must be at least 1", details={"n_qubits": self.n_qubits})

    @property
    def c_sigma(self) -> float:
        return self.c_g + self.c_j + self.c_c

    @property
    def e_c(self) -> float:
        """Charging energy (2e)^2 / (2 C_sigma) in joules."""
        return CONSTANTS["two_e"] ** 2 / (2.0 * self.c_sigma)

    @property
    def v_coupling(self) -> float:
        """Coupling energy scale V = (2e)^2/(2 C_c) (1 - C_c/C_sigma); infinite when C_c = 0."""
        if self.c_c == 0:
            return math.inf
        return CONSTANTS["two_e"] ** 2 / (2.0 * self.c_c) * (1.0 - self.c_c / self.c_sigma)


@dataclass
class GateNoiseTrace:
    """Per-qubit gate-charge fluctuation delta N_{g,k}(t) sampled with period ``dt`` seconds."""

    delta_n_g: NDArray[np.float64]
    dt: float

    def __post_init__(self) -> None:
        self.delta_n_g = np.atleast_2d(np.asarray(self.delta_n_g, dtype=float))
        if self.delta_n_g.shape[1] == 0:
            raise ParameterError("circuit", "gate-noise trace is empty")
        if not self.dt > 0:
            raise ParameterError("circuit", "sampling period must be positive", details={"dt": self.dt})


@dataclass
class EtaTrace:
    """
    Reduced-unit noise fields.

    ``eta`` has shape (N, n_samples) and two-sided PSD 1 at the Nyquist frequency; ``dt`` is
    the sampling period in units of 1/Gamma and ``gamma`` the intensity in rad/s.
    """

    eta: NDArray[np.float64]
    dt: float
    gamma: float


def circuit_to_model(c: CircuitParams) -> Tuple[float, float, float]:
    """
    Map circuit parameters to (epsilon, lambda, E_C).

    epsilon and lambda are angular frequencies in rad/s; E_C is in joules. lambda is computed
    from both E_C^2/(2 hbar V) and the closed form (E_C/2 hbar) C_c/(C_g + C_j).

    Raises
    ------
    NumericalError
        If the two lambda expressions disagree beyond 1e-12 relative.
    """
    hbar = CONSTANTS["hbar"]
    e_c = c.e_c
    epsilon = c.e_j / (2.0 * hbar)

    if c.e_j > CHARGING_HIERARCHY_RATIO * e_c:
        logger.warning("E_J/E_C = %.3g; the two-state approximation expects E_J << E_C", c.e_j / e_c)

    if c.c_c == 0:
        return epsilon, 0.0, e_c

    lambda_appendix = e_c**2 / (2.0 * hbar * c.v_coupling)
    lambda_closed = e_c / (2.0 * hbar) * c.c_c / (c.c_g + c.c_j)
    rel = abs(lambda_appendix - lambda_closed) / abs(lambda_closed)
    if rel > 1e-12:
        raise NumericalError(
            "circuit",
            "coupling-strength formulas disagree",
            details={"lambda_appendix": lambda_appendix, "lambda_closed": lambda_closed, "relative": rel},
        )
    return epsilon, lambda_closed, e_c


def charge_noise_field(trace: GateNoiseTrace, c: CircuitParams, large_n: bool = False) -> NDArray[np.float64]:
    """
    Field hbar^-1 * (E_C/2) [dN_k + (E_C/(N V)) sum_k' dN_k'] in rad/s, shape (N, n_samples).

    With ``large_n`` the collective term is dropped.
    """
    delta = trace.delta_n_g
    if delta.shape[0] != c.n_qubits:
        raise ParameterError("circuit", "trace qubit count differs from circuit", details={"trace": delta.shape[0], "circuit": c.n_qubits})
    field = delta.copy()
    if not large_n and c.c_c > 0:
        collective = delta.sum(axis=0, keepdims=True)
        field = field + c.e_c / (c.n_qubits * c.v_coupling) * collective
    return c.e_c / (2.0 * CONSTANTS["hbar"]) * field


def gate_noise_to_eta(trace: GateNoiseTrace, c: CircuitParams, large_n: bool = False) -> EtaTrace:
    """
    Convert gate-charge fluctuations into reduced-unit eta_k(t) and the intensity Gamma.

    Gamma is fixed by requiring that the two-sided PSD of eta equals 1 at the Nyquist
    frequency, consistent with the white-noise convention of ``isingnoise.noise``; the PSD
    level is read from the top 10% of the band, averaged over qubits.

    Raises
    ------
    NumericalError
        If the trace has zero variance so that Gamma is undefined.
    """
    field = charge_noise_field(trace, c, large_n=large_n)
    if float(np.max(np.var(field, axis=1))) == 0.0:
        raise NumericalError("circuit", "gate-noise trace has zero variance; Gamma is undefined")

    fs = 1.0 / trace.dt
    nperseg = min(field.shape[1], 256)
    freqs, pxx = welch(field, fs=fs, nperseg=nperseg, detrend=False, return_onesided=True, axis=-1)
    # One-sided density doubles interior bins
    top = freqs >= 0.9 * fs / 2
    interior = top & (freqs < fs / 2)
    level = np.where(interior, pxx / 2.0, pxx)[:, top].mean()
    # hbar sqrt(Gamma/2) eta = hbar * field  =>  S_eta = S_field / (Gamma/2)
    gamma = 2.0 * float(level)
    eta_si = field / math.sqrt(gamma / 2.0)
    # delta(tau) = Gamma * delta(Gamma tau) in reduced time
    return EtaTrace(eta=eta_si / math.sqrt(gamma), dt=trace.dt * gamma, gamma=gamma)


def circuit_model_params(c: CircuitParams, gamma: float, f0: float, t_max: float = 10.0) -> ModelParams:
    """Reduced-unit ModelParams for a circuit and a noise intensity ``gamma`` (rad/s); ``f0`` in Hz."""
    epsilon, lambda_, _ = circuit_to_model(c)
    return ModelParams(
        n_qubits=c.n_qubits,
        epsilon=epsilon / gamma,
        lambda_=lambda_ / gamma,
        gamma=1.0,
        f0=f0 / gamma,
        t_max=t_max,
    )


def load_circuit_csv(path: Union[str, Path]) -> List[CircuitParams]:
    """
    Read circuit rows from a CSV with header c_g,c_j,c_c,e_j,n_qubits.

    Raises
    ------
    ParameterError
        If the header differs from the expected one.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CIRCUIT_CSV_HEADER:
            raise ParameterError("circuit", "unexpected CSV header", details={"header": ",".join(reader.fieldnames or [])})
        return [
            CircuitParams(
                c_g=float(row["c_g"]),
                c_j=float(row["c_j"]),
                c_c=float(row["c_c"]),
                e_j=float(row["e_j"]),
                n_qubits=int(row["n_qubits"]),
            )
            for row in reader
        ]


def format_model_params(params: ModelParams) -> str:
    """Render reduced-unit parameters as key=value lines."""
    return "\n".join(
        [
            f"n_qubits={params.n_qubits}",
            f"epsilon={params.epsilon!r}",
            f"lambda={params.lambda_!r}",
            f"gamma={params.gamma!r}",
            f"f0={params.f0!r}",
            f"t_max={params.t_max!r}",
        ]
    )
