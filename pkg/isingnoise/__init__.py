"""
Dissipative Transverse-Field Ising Simulations

This package simulates a fully coupled transverse-field Ising register whose qubits are
driven by white, pink (1/f) or blue (f) noise:
- Noise generation, correlation kernels and power spectra
- Markovian (Lindblad) and Monte Carlo wave-function dynamics
- Time-convolutionless dynamics for colored noise
- Liouvillian spectra, metastability scans and spin correlations
- A circuit-to-model parameter map for transmon registers

Quantities use reduced units where hbar and the noise intensity Gamma are 1.
"""

import logging
import os
from typing import Optional

__version__ = "0.1.0"

from .circuit_map import CircuitParams, circuit_model_params, circuit_to_model
from .config import RunConfig, parse_config, serialize_config
from .correlations import CorrelationSeries, spin_psd, two_time_correlation
from .exceptions import ConfigError, NumericalError, ParameterError, SimulationError
from .liouvillian import build_liouvillian, liouvillian_spectrum, metastability_scan
from .markovian_solver import MarkovianSolver, evolve_markovian, mean_field_evolve
from .mcwf_solver import ensemble_average, run_ensemble, run_trajectory
from .noise import CorrelationKernel, NoiseSequence, analytic_kernel, generate_colored, generate_white
from .scenario_manager import ScenarioManager, run_scenario, sweep
from .solver_base import SolverBase
from .structures import EvolutionGrid, EvolutionResult, ModelParams
from .tcl_solver import TclSolver, evolve_nonmarkovian


def setup_logging(
    level: int = logging.INFO,
    format_str: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    log_file: Optional[str] = None,
) -> None:
    """
    Configure logging for the isingnoise package.

    Args:
        level: The logging level (default: logging.INFO)
        format_str: The log message format string
        log_file: Optional file path to write logs to

    Example:
        >>> import isingnoise
        >>> isingnoise.setup_logging(level=logging.DEBUG)
    """
    logger = logging.getLogger(__name__)
    logger.setLevel(level)

    formatter = logging.Formatter(format_str)

    # One console handler; later calls only adjust its level
    stream_handlers = [
        handler
        for handler in logger.handlers
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler)
    ]
    if stream_handlers:
        for handler in stream_handlers:
            handler.setLevel(level)
    else:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_file and not any(
        isinstance(handler, logging.FileHandler) and handler.baseFilename == os.path.abspath(log_file) for handler in logger.handlers
    ):
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.debug("Logging initialized for isingnoise %s", __version__)


__all__ = [
    "ModelParams",
    "EvolutionGrid",
    "EvolutionResult",
    "SolverBase",
    "MarkovianSolver",
    "TclSolver",
    "ScenarioManager",
    "RunConfig",
    "CircuitParams",
    "CorrelationKernel",
    "NoiseSequence",
    "CorrelationSeries",
    "generate_white",
    "generate_colored",
    "analytic_kernel",
    "evolve_markovian",
    "evolve_nonmarkovian",
    "mean_field_evolve",
    "run_trajectory",
    "run_ensemble",
    "ensemble_average",
    "build_liouvillian",
    "liouvillian_spectrum",
    "metastability_scan",
    "two_time_correlation",
    "spin_psd",
    "circuit_to_model",
    "circuit_model_params",
    "parse_config",
    "serialize_config",
    "run_scenario",
    "sweep",
    "SimulationError",
    "ParameterError",
    "ConfigError",
    "NumericalError",
    "setup_logging",
]
