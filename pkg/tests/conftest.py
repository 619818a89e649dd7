"""
Configuration file for pytest.

This file is automatically loaded by pytest and helps with test configuration.
It adds the project root directory to the Python path, allowing imports from the isingnoise directory,
and provides small model fixtures shared by the test modules.
"""

import sys
from pathlib import Path

import pytest

# Add the project root directory to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from isingnoise.structures import EvolutionGrid, ModelParams  # noqa: E402


@pytest.fixture
def single_qubit() -> ModelParams:
    """One qubit, eps = 10 Gamma, short run on a coarse noise grid."""
    return ModelParams(n_qubits=1, epsilon=10.0, lambda_=0.0, gamma=1.0, f0=50.0, t_max=2.0)


@pytest.fixture
def two_qubits() -> ModelParams:
    """Two coupled qubits with lambda/eps = 1."""
    return ModelParams(n_qubits=2, epsilon=10.0, lambda_=10.0, gamma=1.0, f0=50.0, t_max=2.0)


@pytest.fixture
def coarse_grid() -> EvolutionGrid:
    """Grid with dt = 0.02 up to t = 2."""
    return EvolutionGrid(dt=0.02, t_max=2.0)
