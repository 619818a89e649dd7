"""
Unit tests for the Monte Carlo wave-function solver.

This test suite verifies:
- The Poisson jump schedule and its waiting-time statistics
- Jump direction bookkeeping
- Agreement of the ensemble mean with the master equation
- Seeding, reproducibility and the ensemble summaries
"""

from typing import List

import numpy as np
import pytest

from isingnoise.algebra import build_product_state
from isingnoise.exceptions import ParameterError
from isingnoise.markovian_solver import MarkovianSolver
from isingnoise.mcwf_solver import (
    LOWERING,
    RAISING,
    JumpEvent,
    TrajectoryRecord,
    draw_jump_schedule,
    ensemble_average,
    inter_jump_intervals,
    jump_counts,
    run_ensemble,
    run_trajectory,
    waiting_time_test,
)
from isingnoise.noise import derive_seed
from isingnoise.structures import EvolutionGrid, ModelParams, pure_density_matrix


@pytest.fixture
def uncoupled_pair() -> ModelParams:
    return ModelParams(n_qubits=2, epsilon=10.0, lambda_=0.0, gamma=1.0, f0=50.0, t_max=2.0)


def test_schedule_rate_and_channels(uncoupled_pair: ModelParams) -> None:
    rng = np.random.default_rng(0)
    schedule = draw_jump_schedule(uncoupled_pair, 500.0, rng)
    times = [t for t, _ in schedule]
    assert times == sorted(times)
    assert all(0 < t <= 500.0 for t in times)
    assert {k for _, k in schedule} == {1, 2}
    # 1000 expected events, Poisson spread of about 32
    assert 850 < len(schedule) < 1150


def test_schedule_is_empty_without_noise() -> None:
    params = ModelParams(n_qubits=2, gamma=0.0)
    assert draw_jump_schedule(params, 10.0, np.random.default_rng(1)) == []


def test_single_qubit_jumps_alternate_direction() -> None:
    """Without coupling every flip toggles the spin between up and down."""
    params = ModelParams(n_qubits=1, epsilon=10.0, gamma=1.0, f0=50.0, t_max=20.0)
    psi0 = build_product_state("polarized", params)
    record = run_trajectory(psi0, params, EvolutionGrid(dt=0.1, t_max=20.0), seed=3)
    assert len(record.jumps) > 5
    expected = [LOWERING if i % 2 == 0 else RAISING for i in range(len(record.jumps))]
    assert [j.direction for j in record.jumps] == expected
    assert record.n_jumps_down - record.n_jumps_up in (0, 1)
    assert set(np.round(np.abs(record.m), 12)) == {1.0}


def test_noiseless_trajectory_has_no_jumps() -> None:
    params = ModelParams(n_qubits=2, epsilon=10.0, lambda_=0.0, gamma=0.0, f0=50.0, t_max=2.0)
    psi0 = build_product_state([(0.6, 0.0)], params)
    record = run_trajectory(psi0, params, EvolutionGrid(dt=0.05, t_max=2.0), seed=1)
    assert record.jumps == []
    np.testing.assert_allclose(record.m, 1.0 - 2.0 * 0.36, atol=1e-12)
    assert np.linalg.norm(record.final_state) == pytest.approx(1.0)


def test_rk4_method_matches_exact_propagation(two_qubits: ModelParams) -> None:
    psi0 = build_product_state("unpolarized", two_qubits)
    grid = EvolutionGrid(dt=0.05, t_max=2.0)
    exact = run_trajectory(psi0, two_qubits, grid, seed=11, method="exact")
    approx = run_trajectory(psi0, two_qubits, grid, seed=11, method="rk4")
    assert [j.time for j in exact.jumps] == [j.time for j in approx.jumps]
    np.testing.assert_allclose(approx.polarizations, exact.polarizations, atol=1e-5)


def test_default_method_is_exact(two_qubits: ModelParams) -> None:
    psi0 = build_product_state("unpolarized", two_qubits)
    grid = EvolutionGrid(dt=0.05, t_max=1.0)
    default = run_trajectory(psi0, two_qubits, grid, seed=3)
    exact = run_trajectory(psi0, two_qubits, grid, seed=3, method="exact")
    np.testing.assert_array_equal(default.polarizations, exact.polarizations)
    np.testing.assert_array_equal(default.final_state, exact.final_state)


def test_trajectory_rejects_bad_inputs(two_qubits: ModelParams) -> None:
    with pytest.raises(ParameterError):
        run_trajectory(np.array([1.0, 1.0, 0.0, 0.0]), two_qubits)
    with pytest.raises(ParameterError):
        run_trajectory(build_product_state("polarized", two_qubits), two_qubits, method="euler")


def test_single_qubit_ensemble_follows_exponential_relaxation() -> None:
    params = ModelParams(n_qubits=1, epsilon=10.0, gamma=1.0, f0=50.0, t_max=2.0)
    psi0 = build_product_state("polarized", params)
    records = run_ensemble(psi0, params, 400, master_seed=5, grid=EvolutionGrid(dt=0.1, t_max=2.0), max_workers=2)
    summary = ensemble_average(records)
    exact = np.exp(-2.0 * summary.times)
    assert np.all(np.abs(summary.mean - exact) <= 4.0 * summary.stderr + 0.02)


@pytest.mark.slow
def test_coupled_ensemble_matches_master_equation(two_qubits: ModelParams) -> None:
    grid = EvolutionGrid(dt=0.05, t_max=2.0)
    psi0 = build_product_state("polarized", two_qubits)
    records = run_ensemble(psi0, two_qubits, 600, master_seed=9, grid=grid)
    summary = ensemble_average(records)
    reference = MarkovianSolver(two_qubits, grid).evolve(pure_density_matrix(psi0)).series["m"]
    assert np.all(np.abs(summary.mean - reference) <= 4.0 * summary.stderr + 0.02)


@pytest.mark.slow
def test_strong_coupling_plateau_favours_raising_jumps() -> None:
    params = ModelParams(n_qubits=4, epsilon=10.0, lambda_=100.0, gamma=1.0, f0=50.0, t_max=5.0)
    psi0 = build_product_state("unpolarized", params)
    records = run_ensemble(psi0, params, 100, master_seed=13, grid=EvolutionGrid(dt=0.02, t_max=5.0))
    counts = jump_counts(records, window=(1.0, 5.0))
    assert counts[RAISING] > counts[LOWERING]


def test_ensemble_is_reproducible(two_qubits: ModelParams) -> None:
    psi0 = build_product_state("unpolarized", two_qubits)
    grid = EvolutionGrid(dt=0.1, t_max=1.0)
    first = run_ensemble(psi0, two_qubits, 6, master_seed=2, grid=grid, max_workers=3)
    second = run_ensemble(psi0, two_qubits, 6, master_seed=2, grid=grid, max_workers=1)
    assert [r.seed for r in first] == [derive_seed(2, i) for i in range(6)]
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.m, b.m)
        assert a.jumps == b.jumps


def test_ensemble_requires_trajectories(two_qubits: ModelParams) -> None:
    with pytest.raises(ParameterError):
        run_ensemble(build_product_state("polarized", two_qubits), two_qubits, 0, master_seed=0)


def test_waiting_times_are_exponential(uncoupled_pair: ModelParams) -> None:
    """Inter-jump intervals pass a KS test against Exp(N Gamma)."""
    psi0 = build_product_state("polarized", uncoupled_pair)
    records = run_ensemble(psi0, uncoupled_pair, 40, master_seed=1, grid=EvolutionGrid(dt=0.5, t_max=50.0))
    statistic, p_value = waiting_time_test(records, uncoupled_pair)
    assert p_value > 0.01
    assert statistic < 0.05


def _record(seed: int, m: List[float], jumps: List[tuple]) -> TrajectoryRecord:
    times = np.arange(len(m), dtype=float)
    return TrajectoryRecord(
        seed=seed,
        jumps=[JumpEvent(t, k, d) for t, k, d in jumps],
        times=times,
        polarizations=np.array(m)[:, None],
        m=np.array(m),
    )


def test_ensemble_summary_statistics() -> None:
    records = [
        _record(0, [1.0, 0.5, 0.2], [(0.5, 1, LOWERING)]),
        _record(1, [1.0, 0.3, -0.2], [(0.4, 1, LOWERING), (1.5, 1, RAISING)]),
    ]
    summary = ensemble_average(records, bins=4)
    np.testing.assert_allclose(summary.mean, [1.0, 0.4, 0.0])
    assert summary.m_ms_mean == pytest.approx(0.0)
    assert summary.histogram.sum() == 2
    assert summary.bin_edges[0] == -1.0 and summary.bin_edges[-1] == 1.0
    np.testing.assert_allclose(inter_jump_intervals(records), [0.5, 0.4, 1.1])
    assert jump_counts(records) == {RAISING: 1, LOWERING: 2}
    assert jump_counts(records, window=(1.0, 2.0)) == {RAISING: 1, LOWERING: 0}


def test_ensemble_summary_rejects_bad_input() -> None:
    with pytest.raises(ParameterError):
        ensemble_average([_record(0, [1.0, 0.5], [])])
    with pytest.raises(ParameterError):
        ensemble_average([_record(0, [1.0, 0.5], []), _record(1, [1.0, 0.5, 0.1], [])])
