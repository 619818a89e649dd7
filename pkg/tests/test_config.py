"""
Unit tests for run-configuration parsing.

This test suite verifies:
- key=value parsing with comments, defaults and typed values
- Error reporting with line numbers
- Scenario/solver compatibility and size caps
- Serialization, overrides and hashing
- Worker-count resolution
"""

from dataclasses import replace

import pytest

from isingnoise.config import (
    RunConfig,
    apply_overrides,
    coerce_value,
    config_hash,
    parse_config,
    parse_init_state,
    resolve_worker_count,
    serialize_config,
    with_value,
)
from isingnoise.exceptions import ConfigError
from isingnoise.structures import ModelParams

SAMPLE = """
# lambda/epsilon = 10 headline case
scenario=fig3
n_qubits=4   # small register
epsilon=10
lambda=100
solver=tcl
alpha=-1
lambda_grid=0, 50,100
allow_strong_noise=yes
init_state=0.6,1.5
"""


def test_parse_sample() -> None:
    config = parse_config(SAMPLE)
    assert config.scenario == "fig3"
    assert config.n_qubits == 4
    assert config.lambda_ == 100.0
    assert config.solver == "tcl"
    assert config.alpha == -1.0
    assert config.lambda_grid == (0.0, 50.0, 100.0)
    assert config.allow_strong_noise is True
    assert config.init_state == "0.6,1.5"
    assert config.dt is None


def test_missing_keys_take_defaults() -> None:
    config = parse_config("")
    assert config == RunConfig()
    assert config.n_qubits == 8
    assert config.model == ModelParams(n_qubits=8)


@pytest.mark.parametrize(
    "text, line",
    [
        ("n_qubits=2\nfoo=1\n", 2),
        ("n_qubits=two\n", 1),
        ("seed=1.5\n", 1),
        ("\n\nsolver=qutip\n", 3),
        ("epsilon=1\nepsilon=2\n", 2),
        ("just a line\n", 1),
        ("allow_strong_noise=maybe\n", 1),
        ("init_state=1.5,0\n", 1),
        ("init_state=sideways\n", 1),
    ],
)
def test_errors_report_line(text: str, line: int) -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    assert excinfo.value.line == line


def test_scenario_solver_mismatch() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("n_qubits=3\nsolver=spectral\nscenario=fig4\n")
    assert excinfo.value.line == 3
    assert "mcwf" in str(excinfo.value)


def test_model_errors_become_config_errors() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("n_qubits=2\nepsilon=0\n")
    assert excinfo.value.line == 2


@pytest.mark.parametrize(
    "text",
    [
        "solver=spectral\nn_qubits=7\n",
        "scenario=fig6\nsolver=spectral\nn_qubits=6\n",
        "samples=1001\n",
        "trajectories=0\n",
        "dt=-0.1\n",
        "record_factor=0.5\n",
    ],
)
def test_validation_limits(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_config(text)


def test_coerce_value() -> None:
    assert coerce_value("lambda", " 2.5 ") == ("lambda_", 2.5)
    assert coerce_value("dt", "none") == ("dt", None)
    assert coerce_value("n_qubits", "4.0") == ("n_qubits", 4)
    assert coerce_value("approximation", "effective_rate") == ("approximation", "effective_rate")
    with pytest.raises(ConfigError):
        coerce_value("kernel_source", "measured")


def test_parse_init_state() -> None:
    assert parse_init_state("ground") == "ground"
    assert parse_init_state("0.6,1.5") == [(0.6, 1.5)]


def test_serialization_round_trip() -> None:
    config = replace(parse_config(SAMPLE), dt=0.002, t_ref=5.0)
    text = serialize_config(config)
    assert "lambda=100.0" in text
    assert "allow_strong_noise=true" in text
    assert parse_config(text) == config
    assert "dt=" not in serialize_config(RunConfig())


def test_overrides_apply_and_revalidate() -> None:
    config = apply_overrides(RunConfig(), ["n_qubits=3", "lambda=30", "solver=mcwf"])
    assert (config.n_qubits, config.lambda_, config.solver) == (3, 30.0, "mcwf")
    with pytest.raises(ConfigError):
        apply_overrides(config, ["n_qubits"])
    with pytest.raises(ConfigError):
        apply_overrides(config, ["scenario=fig5"])


def test_with_value_converts_types() -> None:
    config = with_value(RunConfig(), "n_qubits", 3.0)
    assert config.n_qubits == 3
    assert with_value(config, "lambda", 7).lambda_ == 7.0


def test_config_hash_tracks_content() -> None:
    base = RunConfig(n_qubits=2)
    assert config_hash(base) == config_hash(RunConfig(n_qubits=2))
    assert config_hash(base) != config_hash(RunConfig(n_qubits=3))
    assert len(config_hash(base)) == 64


def test_worker_count(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("SIM_THREADS", raising=False)
    assert resolve_worker_count(3, max_workers=8) == 3
    assert resolve_worker_count(0, max_workers=8) == 1
    monkeypatch.setenv("SIM_THREADS", "2")
    assert resolve_worker_count(10, max_workers=8) == 2
    monkeypatch.setenv("SIM_THREADS", "lots")
    assert resolve_worker_count(10, max_workers=4) == 4
