"""
White and 1/f^alpha Gaussian noise.

Colored sequences are produced by shaping the DFT of a white sequence:
  1. sample a white Gaussian sequence h_n (unit delta correlation, variance f0);
  2. take the DFT H_j = (1/2n_max) sum_n h_n exp(-i pi n j / n_max);
  3. multiply bin j by (n_max / min(j, 2n_max - j))^(alpha/2) (DC bin zeroed);
  4. invert the DFT without prefactor.

The filter is exactly 1 at the Nyquist bin j = n_max, so all colors share the white PSD
level there. Estimators for the correlation K(tau) and the PSD S(2 pi f) use the same
normalization: white noise has K(tau) = delta(tau) and S = 1.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.signal import welch

from .exceptions import ParameterError

logger = logging.getLogger(__name__)

MAX_ABS_ALPHA = 2.0
REALITY_TOL = 1e-10
MIN_PSD_SAMPLES = 64


@dataclass(frozen=True)
class NoiseSequence:
    """
    Sampled stochastic field.

    Units:
      - samples: 1/sqrt(time) in reduced units (white: variance f0).
      - dt: sampling period 1/f0 in units of 1/Gamma.
    """

    samples: NDArray[np.float64]
    dt: float
    alpha: float
    seed: int

    @property
    def n_max(self) -> int:
        return len(self.samples) // 2

    def times(self) -> NDArray[np.float64]:
        return np.arange(len(self.samples)) * self.dt


@dataclass(frozen=True)
class CorrelationKernel:
    """
    Stationary correlation kappa(tau) on the grid tau = j * dt (one-sided storage).

    ``singular`` marks kernels of sampled noise, whose tau = 0 sample carries a delta
    contribution: quadratures give it full weight. ``stderr`` is set by ensemble estimates.
    """

    kappa: NDArray[np.float64]
    dt: float
    alpha: float
    singular: bool = True
    stderr: Optional[NDArray[np.float64]] = None

    def taus(self) -> NDArray[np.float64]:
        return np.arange(len(self.kappa)) * self.dt

    def value(self, j: int) -> float:
        """kappa at lag j * dt; sampled-noise kernels are periodic in the record length."""
        if self.singular:
            return float(self.kappa[j % len(self.kappa)])
        if j >= len(self.kappa):
            raise ParameterError("noise", "lag beyond the stored kernel", details={"lag": j, "length": len(self.kappa)})
        return float(self.kappa[j])

    def lags(self, n: int) -> NDArray[np.float64]:
        """kappa at lags 0..n-1."""
        if self.singular:
            return self.kappa[np.arange(n) % len(self.kappa)]
        if n > len(self.kappa):
            raise ParameterError("noise", "lag beyond the stored kernel", details={"lags": n, "length": len(self.kappa)})
        return self.kappa[:n]

    def enhancement(self, n: int) -> float:
        """Integral of kappa over [0, n*dt] with the kernel's endpoint convention."""
        if n == 0:
            return float(self.kappa[0] * self.dt) if self.singular else 0.0
        values = self.lags(n + 1)
        weights = np.ones(n + 1)
        weights[n] = 0.5
        weights[0] = 1.0 if self.singular else 0.5
        return float(np.dot(weights, values) * self.dt)


@dataclass(frozen=True)
class PsdEstimate:
    """Two-sided power spectral density S(2 pi f) on positive frequencies (0, f0/2]."""

    freqs: NDArray[np.float64]
    values: NDArray[np.float64]

    def loglog_slope(self, f_min: float, f_max: float) -> float:
        """Least-squares slope of log S against log f over [f_min, f_max]."""
        band = (self.freqs >= f_min) & (self.freqs <= f_max) & (self.values > 0)
        slope, _ = np.polyfit(np.log(self.freqs[band]), np.log(self.values[band]), 1)
        return float(slope)

    def total_power(self) -> float:
        """Integral of S over both frequency signs; the Nyquist bin is counted once."""
        df = float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else float(self.freqs[0])
        return float((2.0 * self.values.sum() - self.values[-1]) * df)


def derive_seed(master_seed: int, index: int) -> int:
    """Independent child seed for realization ``index`` of ``master_seed``."""
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1)[0])


def _check_alpha(alpha: float) -> None:
    if abs(alpha) > MAX_ABS_ALPHA:
        raise ParameterError("noise", "spectral exponent outside [-2, 2]", details={"alpha": alpha})


def generate_white(n_samples: int, seed: int, f0: float = 500.0) -> NoiseSequence:
    """
    Draw i.i.d. Gaussian samples with mean 0 and variance f0.

    The variance makes the discrete sequence a unit delta correlation,
    <h_n h_m> dt = delta_nm.

    Raises
    ------
    ParameterError
        If ``n_samples`` is odd or below 2.
    """
    if n_samples < 2 or n_samples % 2:
        raise ParameterError("noise", "sample count must be even and at least 2", details={"n_samples": n_samples})
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal(n_samples) * np.sqrt(f0)
    return NoiseSequence(samples=samples, dt=1.0 / f0, alpha=0.0, seed=seed)


def shaping_filter(n_samples: int, alpha: float) -> NDArray[np.float64]:
    """Real, symmetric per-bin amplitude factor for a record of ``n_samples``."""
    _check_alpha(alpha)
    if alpha == 0:
        return np.ones(n_samples)
    n_max = n_samples // 2
    j = np.arange(n_samples)
    folded = np.minimum(j, n_samples - j).astype(float)
    factor = np.zeros(n_samples)
    factor[1:] = (n_max / folded[1:]) ** (alpha / 2.0)
    return factor


def shape_spectrum(white: NoiseSequence, alpha: float) -> NoiseSequence:
    """
    Filter a white sequence into 1/f^alpha noise.

    The imaginary residue of the inverse DFT is checked against 1e-10 of the peak amplitude
    and logged when exceeded.

    Raises
    ------
    ParameterError
        If the input is not white or ``alpha`` lies outside [-2, 2].
    """
    if white.alpha != 0:
        raise ParameterError("noise", "spectral shaping requires a white input", details={"alpha": white.alpha})
    _check_alpha(alpha)
    if alpha == 0:
        return white

    n = len(white.samples)
    spectrum = np.fft.fft(white.samples) / n
    shaped = np.fft.ifft(spectrum * shaping_filter(n, alpha)) * n
    peak = float(np.max(np.abs(shaped.real))) or 1.0
    residue = float(np.max(np.abs(shaped.imag))) / peak
    if residue > REALITY_TOL:
        logger.warning("Imaginary residue %.3g after inverse DFT exceeds %.1g", residue, REALITY_TOL)
    return NoiseSequence(samples=shaped.real.copy(), dt=white.dt, alpha=alpha, seed=white.seed)


def generate_colored(n_samples: int, alpha: float, seed: int, f0: float = 500.0) -> NoiseSequence:
    """White draw followed by spectral shaping."""
    return shape_spectrum(generate_white(n_samples, seed, f0), alpha)


def generate_field(n_qubits: int, n_samples: int, alpha: float, seed: int, f0: float = 500.0) -> List[NoiseSequence]:
    """Independent sequences for qubits 1..N with seeds derived from (seed, k)."""
    return [generate_colored(n_samples, alpha, derive_seed(seed, k), f0) for k in range(1, n_qubits + 1)]


def estimate_correlation(
    realizations: Sequence[Sequence[NoiseSequence]],
    k: int,
    k_prime: int,
) -> CorrelationKernel:
    """
    Ensemble- and time-averaged estimate of K_{k,k'}(tau).

    Each realization is a per-qubit list of sequences; ``k`` and ``k_prime`` are 1-based
    qubit labels. The time average is circular, matching the periodic records.

    Raises
    ------
    ParameterError
        If fewer than two realizations are given or lengths differ.
    """
    if len(realizations) < 2:
        raise ParameterError("noise", "at least two realizations are required", details={"realizations": len(realizations)})
    first = realizations[0][k - 1]
    n = len(first.samples)
    estimates = []
    for fields in realizations:
        a, b = fields[k - 1], fields[k_prime - 1]
        if len(a.samples) != n or len(b.samples) != n:
            raise ParameterError("noise", "realizations must share one length", details={"expected": n})
        # c_j = (1/n) sum_m a_{m+j} b_m
        cross = np.fft.ifft(np.fft.fft(a.samples) * np.conj(np.fft.fft(b.samples))).real / n
        estimates.append(cross)
    stack = np.array(estimates)
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(len(estimates))
    return CorrelationKernel(kappa=mean, dt=first.dt, alpha=first.alpha, singular=True, stderr=stderr)


def estimate_psd(seq: NoiseSequence, n_segments: int = 8, window: str = "hann") -> PsdEstimate:
    """
    Welch estimate of the two-sided PSD on (0, f0/2].

    Segments overlap by 50%; white noise gives S = 1 at all frequencies. With
    ``n_segments=1`` and ``window="boxcar"`` the estimate is a plain periodogram whose
    ``total_power`` equals the sample variance.

    Raises
    ------
    ParameterError
        If the sequence is shorter than 64 samples.
    """
    n = len(seq.samples)
    if n < MIN_PSD_SAMPLES:
        raise ParameterError("noise", "sequence too short for a PSD estimate", details={"length": n})
    if n_segments < 1:
        raise ParameterError("noise", "segment count must be positive", details={"n_segments": n_segments})
    nperseg = (2 * n // (n_segments + 1)) if n_segments > 1 else n
    nperseg -= nperseg % 2
    fs = 1.0 / seq.dt
    freqs, pxx = welch(
        seq.samples,
        fs=fs,
        window=window,
        nperseg=nperseg,
        noverlap=nperseg // 2 if n_segments > 1 else 0,
        detrend="constant",
        return_onesided=True,
        scaling="density",
    )
    # One-sided density doubles every bin except DC and Nyquist
    pxx = pxx.copy()
    pxx[1:-1] /= 2.0
    return PsdEstimate(freqs=freqs[1:], values=pxx[1:])


def average_psd(estimates: Sequence[PsdEstimate]) -> PsdEstimate:
    """Pointwise mean of estimates sharing a frequency grid."""
    return PsdEstimate(freqs=estimates[0].freqs, values=np.mean([e.values for e in estimates], axis=0))


def analytic_kernel(alpha: float, n_max: int, f0: float) -> CorrelationKernel:
    """
    Noise-free ensemble-average correlation of the shaped sequences.

    The shaped process is circulant, so kappa_j = f0 * IDFT(|filter|^2)_j; alpha = 0
    reproduces the unit delta kappa_0 * dt = 1.
    """
    _check_alpha(alpha)
    n = 2 * n_max
    power = shaping_filter(n, alpha) ** 2
    kappa = f0 * np.fft.ifft(power).real
    if alpha == 0:
        kappa = np.zeros(n)
        kappa[0] = f0
    return CorrelationKernel(kappa=kappa, dt=1.0 / f0, alpha=alpha, singular=True)
