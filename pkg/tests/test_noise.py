"""
Unit tests for noise generation and its estimators.

This test suite verifies:
- White noise normalization and seeding
- The shaping filter and colored spectra (slopes, shared Nyquist level)
- Correlation estimates against the analytic kernels
- Kernel bookkeeping (periodicity, enhancement factor)
"""

from typing import List

import numpy as np
import pytest

from isingnoise.exceptions import ParameterError
from isingnoise.noise import (
    CorrelationKernel,
    NoiseSequence,
    analytic_kernel,
    average_psd,
    derive_seed,
    estimate_correlation,
    estimate_psd,
    generate_colored,
    generate_field,
    generate_white,
    shape_spectrum,
    shaping_filter,
)

F0 = 500.0


def _psd(alpha: float, realizations: int = 4, n: int = 16384):
    return average_psd([estimate_psd(generate_colored(n, alpha, derive_seed(11, r), F0)) for r in range(realizations)])


def test_white_noise_variance_is_f0() -> None:
    """Unit delta correlation: <h^2> dt = 1."""
    seq = generate_white(16384, seed=3, f0=F0)
    assert seq.dt == pytest.approx(1.0 / F0)
    assert np.mean(seq.samples) == pytest.approx(0.0, abs=5.0 * np.sqrt(F0 / 16384))
    assert np.var(seq.samples) / F0 == pytest.approx(1.0, rel=0.05)


def test_generation_is_reproducible() -> None:
    first = generate_colored(1024, 1.0, seed=7)
    second = generate_colored(1024, 1.0, seed=7)
    other = generate_colored(1024, 1.0, seed=8)
    np.testing.assert_array_equal(first.samples, second.samples)
    assert not np.allclose(first.samples, other.samples)


@pytest.mark.parametrize("n_samples", [0, 1, 101])
def test_white_rejects_odd_or_tiny_lengths(n_samples: int) -> None:
    with pytest.raises(ParameterError):
        generate_white(n_samples, seed=0)


def test_shaping_filter_values() -> None:
    pink = shaping_filter(16, 1.0)
    assert pink[0] == 0.0
    assert pink[8] == pytest.approx(1.0)
    assert pink[1] == pytest.approx(np.sqrt(8.0))
    np.testing.assert_allclose(pink[1:], pink[1:][::-1])
    np.testing.assert_allclose(shaping_filter(16, 0.0), np.ones(16))


def test_shape_spectrum_keeps_white_and_rejects_bad_input() -> None:
    white = generate_white(64, seed=1)
    assert shape_spectrum(white, 0.0) is white
    pink = shape_spectrum(white, 1.0)
    assert pink.alpha == 1.0
    assert pink.seed == white.seed
    with pytest.raises(ParameterError):
        shape_spectrum(pink, -1.0)
    with pytest.raises(ParameterError):
        shape_spectrum(white, 2.5)


def test_shaped_noise_has_zero_mean() -> None:
    """The DC bin is removed by the filter."""
    seq = generate_colored(4096, 1.0, seed=5)
    assert abs(np.mean(seq.samples)) < 1e-9 * np.max(np.abs(seq.samples))


def test_white_psd_is_flat_unity() -> None:
    psd = _psd(0.0)
    assert np.mean(psd.values) == pytest.approx(1.0, rel=0.05)
    assert psd.freqs[-1] == pytest.approx(F0 / 2)


@pytest.mark.parametrize("alpha", [1.0, -1.0])
def test_colored_psd_slope(alpha: float) -> None:
    """S(f) falls as 1/f for pink noise and rises as f for blue noise."""
    psd = _psd(alpha)
    assert psd.loglog_slope(2.0, 100.0) == pytest.approx(-alpha, abs=0.2)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.0, 1.0, -1.0])
def test_psd_slope_over_the_full_band(alpha: float) -> None:
    psd = _psd(alpha, realizations=200)
    assert psd.loglog_slope(F0 / 100.0, F0 / 2.0) == pytest.approx(-alpha, abs=0.1)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -1.0])
def test_colors_share_the_nyquist_level(alpha: float) -> None:
    psd = _psd(alpha)
    top = psd.values[psd.freqs > 0.95 * F0 / 2]
    assert np.mean(top) == pytest.approx(1.0, abs=0.15)


def test_periodogram_obeys_parseval() -> None:
    seq = generate_colored(4096, 1.0, seed=9)
    psd = estimate_psd(seq, n_segments=1, window="boxcar")
    assert psd.total_power() == pytest.approx(np.var(seq.samples), rel=1e-9)


def test_psd_rejects_short_sequences() -> None:
    with pytest.raises(ParameterError):
        estimate_psd(generate_white(32, seed=0))
    with pytest.raises(ParameterError):
        estimate_psd(generate_white(128, seed=0), n_segments=0)


def test_white_correlation_is_a_delta() -> None:
    realizations: List[List[NoiseSequence]] = [generate_field(2, 4096, 0.0, derive_seed(21, r)) for r in range(4)]
    auto = estimate_correlation(realizations, 1, 1)
    assert auto.kappa[0] * auto.dt == pytest.approx(1.0, rel=0.05)
    assert np.max(np.abs(auto.kappa[1:50] * auto.dt)) < 0.1
    assert auto.stderr is not None and auto.stderr.shape == auto.kappa.shape
    cross = estimate_correlation(realizations, 1, 2)
    assert np.max(np.abs(cross.kappa[:50] * cross.dt)) < 0.1


def test_correlation_estimate_requires_two_realizations() -> None:
    with pytest.raises(ParameterError):
        estimate_correlation([generate_field(1, 64, 0.0, 0)], 1, 1)
    with pytest.raises(ParameterError):
        estimate_correlation([generate_field(1, 64, 0.0, 0), generate_field(1, 128, 0.0, 1)], 1, 1)


def test_sampled_pink_correlation_tracks_analytic_kernel() -> None:
    n = 2048
    realizations = [generate_field(1, n, 1.0, derive_seed(5, r)) for r in range(200)]
    estimate = estimate_correlation(realizations, 1, 1)
    exact = analytic_kernel(1.0, n // 2, F0)
    scale = exact.kappa[0]
    assert np.max(np.abs(estimate.kappa[:20] - exact.kappa[:20])) / scale < 0.15


def test_analytic_white_kernel() -> None:
    kernel = analytic_kernel(0.0, 512, F0)
    assert kernel.kappa[0] * kernel.dt == pytest.approx(1.0)
    assert np.all(kernel.kappa[1:] == 0.0)
    assert kernel.enhancement(100) == pytest.approx(1.0)


def test_analytic_pink_kernel() -> None:
    """kappa_0 dt is a harmonic number and the kernel stays positive at short lags."""
    n_max = 4096
    kernel = analytic_kernel(1.0, n_max, F0)
    harmonic = np.sum(1.0 / np.arange(1, n_max))
    assert kernel.kappa[0] * kernel.dt == pytest.approx(harmonic + 1.0 / (2 * n_max), rel=1e-10)
    assert np.all(kernel.kappa[1 : (2 * n_max) // 12] > 0)
    assert kernel.enhancement(100) > 1.0


def test_analytic_blue_kernel() -> None:
    """Blue noise anticorrelates at odd lags and vanishes at even lags."""
    n_max = 1024
    kernel = analytic_kernel(-1.0, n_max, F0)
    assert kernel.kappa[0] * kernel.dt == pytest.approx(0.5)
    np.testing.assert_allclose(kernel.kappa[2:200:2], 0.0, atol=1e-9 * F0)
    assert np.all(kernel.kappa[1:200:2] < 0)
    assert 0.0 < kernel.enhancement(100) < 1.0


def test_blue_kernel_is_negative_on_half_the_lags() -> None:
    """Only odd lags carry anticorrelation, so about half of the non-zero lags are negative."""
    n_max = 8192
    kappa = analytic_kernel(-1.0, n_max, F0).kappa[1:n_max]
    negative = kappa < -1e-9 * F0
    assert np.all(negative[0::2])
    assert not np.any(negative[1::2])
    assert np.mean(negative) == pytest.approx(0.5, abs=1e-3)


def test_kernel_lag_access() -> None:
    periodic = CorrelationKernel(kappa=np.array([3.0, 2.0, 1.0, 2.0]), dt=0.5, alpha=1.0)
    assert periodic.value(5) == 2.0
    np.testing.assert_allclose(periodic.lags(6), [3.0, 2.0, 1.0, 2.0, 3.0, 2.0])
    np.testing.assert_allclose(periodic.taus(), [0.0, 0.5, 1.0, 1.5])

    smooth = CorrelationKernel(kappa=np.array([1.0, 0.5, 0.25]), dt=1.0, alpha=0.0, singular=False)
    with pytest.raises(ParameterError):
        smooth.value(3)
    with pytest.raises(ParameterError):
        smooth.lags(4)


def test_enhancement_endpoint_conventions() -> None:
    values = np.array([2.0, 1.0, 1.0])
    singular = CorrelationKernel(kappa=values, dt=0.1, alpha=1.0, singular=True)
    smooth = CorrelationKernel(kappa=values, dt=0.1, alpha=1.0, singular=False)
    assert singular.enhancement(0) == pytest.approx(0.2)
    assert smooth.enhancement(0) == 0.0
    # full weight at tau = 0 versus the trapezoid
    assert singular.enhancement(2) == pytest.approx((2.0 + 1.0 + 0.5) * 0.1)
    assert smooth.enhancement(2) == pytest.approx((1.0 + 1.0 + 0.5) * 0.1)


def test_derive_seed_is_deterministic() -> None:
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(1, i) for i in range(50)}) == 50


def test_generate_field_uses_distinct_qubit_seeds() -> None:
    field = generate_field(3, 256, -1.0, seed=4)
    assert [s.alpha for s in field] == [-1.0, -1.0, -1.0]
    assert len({s.seed for s in field}) == 3
    assert not np.allclose(field[0].samples, field[1].samples)
