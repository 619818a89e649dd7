"""
Unit tests for the circuit-to-model mapping.

This test suite verifies:
- Circuit parameter validation and derived energies
- epsilon and lambda from the capacitance network
- Conversion of gate-charge noise to reduced-unit fields
- CSV loading and key=value rendering
"""

import logging
import math
from pathlib import Path

import numpy as np
import pytest

from isingnoise.circuit_map import (
    CONSTANTS,
    CircuitParams,
    GateNoiseTrace,
    charge_noise_field,
    circuit_model_params,
    circuit_to_model,
    format_model_params,
    gate_noise_to_eta,
    load_circuit_csv,
)
from isingnoise.config import parse_config
from isingnoise.exceptions import NumericalError, ParameterError

HBAR = CONSTANTS["hbar"]


@pytest.fixture
def circuit() -> CircuitParams:
    """1 fF island with a 0.1 fF coupling capacitor and E_J = E_C / 50."""
    return CircuitParams(c_g=2e-16, c_j=7e-16, c_c=1e-16, e_j=1e-24, n_qubits=2)


def test_charging_energy(circuit: CircuitParams) -> None:
    assert circuit.c_sigma == pytest.approx(1e-15)
    assert circuit.e_c == pytest.approx(CONSTANTS["two_e"] ** 2 / 2e-15)
    assert math.isinf(CircuitParams(c_g=1e-16, c_j=1e-16, c_c=0.0, e_j=1e-25, n_qubits=1).v_coupling)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"c_g": 0.0, "c_j": 1e-16, "c_c": 0.0, "e_j": 1e-25, "n_qubits": 1},
        {"c_g": 1e-16, "c_j": 1e-16, "c_c": -1e-17, "e_j": 1e-25, "n_qubits": 1},
        {"c_g": 1e-16, "c_j": 1e-16, "c_c": 0.0, "e_j": 0.0, "n_qubits": 1},
        {"c_g": 1e-16, "c_j": 1e-16, "c_c": 0.0, "e_j": 1e-25, "n_qubits": 0},
    ],
)
def test_circuit_validation(kwargs: dict) -> None:
    with pytest.raises(ParameterError):
        CircuitParams(**kwargs)


def test_circuit_to_model(circuit: CircuitParams) -> None:
    epsilon, lambda_, e_c = circuit_to_model(circuit)
    assert epsilon == pytest.approx(1e-24 / (2 * HBAR))
    assert lambda_ == pytest.approx(e_c / (2 * HBAR) * 1e-16 / 9e-16, rel=1e-12)
    assert e_c == pytest.approx(circuit.e_c)


def test_uncoupled_circuit_has_no_lambda() -> None:
    _, lambda_, _ = circuit_to_model(CircuitParams(c_g=2e-16, c_j=8e-16, c_c=0.0, e_j=1e-24, n_qubits=3))
    assert lambda_ == 0.0


def test_weak_charging_hierarchy_warns(caplog: pytest.LogCaptureFixture) -> None:
    strong_josephson = CircuitParams(c_g=2e-16, c_j=8e-16, c_c=0.0, e_j=1e-23, n_qubits=1)
    with caplog.at_level(logging.WARNING, logger="isingnoise.circuit_map"):
        circuit_to_model(strong_josephson)
    assert "two-state approximation" in caplog.text


def test_reduced_model_parameters(circuit: CircuitParams) -> None:
    gamma = 1e8
    params = circuit_model_params(circuit, gamma, f0=1e11, t_max=5.0)
    epsilon, lambda_, _ = circuit_to_model(circuit)
    assert params.epsilon == pytest.approx(epsilon / gamma)
    assert params.lambda_ == pytest.approx(lambda_ / gamma)
    assert params.gamma == 1.0
    assert params.f0 == pytest.approx(1000.0)
    assert params.t_max == 5.0


def test_charge_noise_collective_term(circuit: CircuitParams) -> None:
    trace = GateNoiseTrace(np.array([[1.0, 1.0], [0.0, 0.0]]), dt=1e-9)
    field = charge_noise_field(trace, circuit)
    scale = circuit.e_c / (2 * HBAR)
    share = circuit.e_c / (2 * circuit.v_coupling)
    np.testing.assert_allclose(field[0], scale * (1.0 + share))
    np.testing.assert_allclose(field[1], scale * share)
    np.testing.assert_allclose(charge_noise_field(trace, circuit, large_n=True)[1], 0.0)


def test_gate_noise_to_eta_normalization(circuit: CircuitParams) -> None:
    """White gate noise maps to eta with unit delta correlation in reduced time."""
    rng = np.random.default_rng(0)
    sigma, dt = 1e-3, 1e-10
    trace = GateNoiseTrace(sigma * rng.standard_normal((2, 65536)), dt=dt)
    eta = gate_noise_to_eta(trace, circuit, large_n=True)
    scale = circuit.e_c / (2 * HBAR)
    assert eta.gamma == pytest.approx(2.0 * scale**2 * sigma**2 * dt, rel=0.1)
    assert eta.dt == pytest.approx(dt * eta.gamma)
    assert eta.eta.shape == (2, 65536)
    assert np.var(eta.eta) * eta.dt == pytest.approx(1.0, rel=0.1)


def test_gate_noise_validation(circuit: CircuitParams) -> None:
    with pytest.raises(NumericalError):
        gate_noise_to_eta(GateNoiseTrace(np.zeros((2, 64)), dt=1e-9), circuit)
    with pytest.raises(ParameterError):
        charge_noise_field(GateNoiseTrace(np.ones((3, 8)), dt=1e-9), circuit)
    with pytest.raises(ParameterError):
        GateNoiseTrace(np.ones((1, 8)), dt=0.0)


def test_load_circuit_csv(tmp_path: Path) -> None:
    path = tmp_path / "circuits.csv"
    path.write_text("c_g,c_j,c_c,e_j,n_qubits\n2e-16,7e-16,1e-16,1e-24,2\n2e-16,8e-16,0,1e-24,4\n", encoding="utf-8")
    circuits = load_circuit_csv(path)
    assert len(circuits) == 2
    assert circuits[0].c_c == pytest.approx(1e-16)
    assert circuits[1].n_qubits == 4


def test_load_circuit_csv_rejects_header(tmp_path: Path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("cg,cj,cc,ej,n\n1,1,1,1,1\n", encoding="utf-8")
    with pytest.raises(ParameterError):
        load_circuit_csv(path)


def test_formatted_parameters_parse_as_config(circuit: CircuitParams) -> None:
    params = circuit_model_params(circuit, 1e8, f0=1e11)
    text = format_model_params(params)
    assert text.splitlines()[0] == "n_qubits=2"
    config = parse_config(text)
    assert config.model == params
