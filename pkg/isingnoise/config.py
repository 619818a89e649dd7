"""
Run configuration: flat UTF-8 ``key=value`` files with ``#`` comments.

Example
-------
    # lambda/epsilon = 10 headline case
    scenario=fig3
    n_qubits=8
    epsilon=10
    lambda=100
"""

import hashlib
import logging
import os
from dataclasses import dataclass, fields, replace
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .exceptions import ConfigError, ParameterError
from .structures import ModelParams

logger = logging.getLogger(__name__)

SCENARIOS = ("noise", "fig3", "fig4", "fig5", "fig6", "custom")
SOLVERS = ("markovian", "mcwf", "tcl", "spectral")
STATE_PRESETS = ("unpolarized", "polarized", "ground")
SCENARIO_SOLVERS: Dict[str, Tuple[str, ...]] = {
    "fig3": ("markovian", "tcl"),
    "fig4": ("mcwf",),
    "fig5": ("tcl",),
    "fig6": ("spectral",),
}
SPECTRAL_MAX_QUBITS = 6
FIG6_MAX_QUBITS = 5
THREADS_ENV = "SIM_THREADS"


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration.

    Model fields mirror :class:`ModelParams`; ``dt`` defaults to the noise period 1/f0 and
    ``t_ref`` to t_max / 2 when left unset.
    """

    scenario: str = "custom"
    n_qubits: int = 8
    epsilon: float = 10.0
    lambda_: float = 0.0
    gamma: float = 1.0
    f0: float = 500.0
    t_max: float = 10.0
    solver: str = "markovian"
    alpha: float = 0.0
    trajectories: int = 100
    seed: int = 0
    output_dir: str = "output"
    dt: Optional[float] = None
    sample_stride: int = 1
    init_state: str = "unpolarized"
    t_ref: Optional[float] = None
    tau_max: Optional[float] = None
    realizations: int = 100
    samples: int = 16384
    record_factor: float = 1.0
    approximation: str = "full"
    kernel_source: str = "analytic"
    mcwf_method: str = "exact"
    correlation_method: str = "ode"
    max_phase_step: float = 0.1
    allow_strong_noise: bool = False
    lambda_grid: Tuple[float, ...] = ()
    bins: int = 21

    @property
    def model(self) -> ModelParams:
        return ModelParams(
            n_qubits=self.n_qubits,
            epsilon=self.epsilon,
            lambda_=self.lambda_,
            gamma=self.gamma,
            f0=self.f0,
            t_max=self.t_max,
        )


def _field_for_key(key: str) -> str:
    return "lambda_" if key == "lambda" else key


def _key_for_field(name: str) -> str:
    return "lambda" if name == "lambda_" else name


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_optional_float(raw: str) -> Optional[float]:
    return None if raw.strip().lower() in ("", "none") else float(raw)


def _parse_grid(raw: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _parse_int(raw: str) -> int:
    value = float(raw)
    if not value.is_integer():
        raise ValueError(f"not an integer: {raw!r}")
    return int(value)


_PARSERS: Dict[str, Callable[[str], Any]] = {
    "n_qubits": _parse_int,
    "epsilon": float,
    "lambda_": float,
    "gamma": float,
    "f0": float,
    "t_max": float,
    "alpha": float,
    "trajectories": _parse_int,
    "seed": _parse_int,
    "dt": _parse_optional_float,
    "sample_stride": _parse_int,
    "t_ref": _parse_optional_float,
    "tau_max": _parse_optional_float,
    "realizations": _parse_int,
    "samples": _parse_int,
    "record_factor": float,
    "max_phase_step": float,
    "allow_strong_noise": _parse_bool,
    "lambda_grid": _parse_grid,
    "bins": _parse_int,
}

_CHOICES: Dict[str, Tuple[str, ...]] = {
    "scenario": SCENARIOS,
    "solver": SOLVERS,
    "approximation": ("full", "effective_rate"),
    "kernel_source": ("analytic", "sampled"),
    "mcwf_method": ("exact", "rk4"),
    "correlation_method": ("ode", "spectral"),
}

KNOWN_KEYS = tuple(_key_for_field(f.name) for f in fields(RunConfig))


def coerce_value(key: str, raw: str, line: Optional[int] = None) -> Tuple[str, Any]:
    """
    Convert one raw value to the type of its RunConfig field.

    Returns
    -------
    tuple
        The dataclass field name and the converted value.

    Raises
    ------
    ConfigError
        For an unknown key, a value of the wrong type or a value outside its choices.
    """
    key = key.strip()
    if key not in KNOWN_KEYS:
        raise ConfigError(f"unknown key '{key}'", line=line)
    name = _field_for_key(key)
    raw = raw.strip()
    if name in _PARSERS:
        try:
            return name, _PARSERS[name](raw)
        except ValueError as exc:
            raise ConfigError(f"invalid value for '{key}': {exc}", line=line) from exc
    if name in _CHOICES and raw not in _CHOICES[name]:
        raise ConfigError(f"'{key}' must be one of {', '.join(_CHOICES[name])}", line=line, details={"value": raw})
    if name == "init_state":
        _check_init_state(raw, line)
    return name, raw


def _check_init_state(raw: str, line: Optional[int]) -> None:
    if raw in STATE_PRESETS:
        return
    try:
        amplitude, phase = (float(v) for v in raw.split(","))
    except ValueError as exc:
        raise ConfigError("init_state must be a preset or 'A,phi'", line=line, details={"value": raw}) from exc
    if not 0.0 <= amplitude <= 1.0:
        raise ConfigError("init_state amplitude must lie in [0, 1]", line=line, details={"A": amplitude, "phi": phase})


def parse_init_state(raw: str) -> Any:
    """A preset name, or a single (A, phi) pair broadcast to all qubits."""
    if raw in STATE_PRESETS:
        return raw
    amplitude, phase = (float(v) for v in raw.split(","))
    return [(amplitude, phase)]


def _validate(config: RunConfig, lines: Dict[str, int]) -> None:
    def line_of(*names: str) -> Optional[int]:
        found = [lines[n] for n in names if n in lines]
        return max(found) if found else None

    model_keys = ("n_qubits", "epsilon", "lambda_", "gamma", "f0", "t_max")
    try:
        config.model
    except ParameterError as exc:
        raise ConfigError(exc.message, line=line_of(*model_keys), details=exc.details) from exc

    allowed = SCENARIO_SOLVERS.get(config.scenario)
    if allowed is not None and config.solver not in allowed:
        raise ConfigError(
            f"scenario '{config.scenario}' requires solver {' or '.join(allowed)}",
            line=line_of("scenario", "solver"),
            details={"solver": config.solver},
        )
    if config.solver == "spectral" and config.n_qubits > SPECTRAL_MAX_QUBITS:
        raise ConfigError(
            f"spectral solver is capped at N <= {SPECTRAL_MAX_QUBITS}",
            line=line_of("solver", "n_qubits"),
            details={"n_qubits": config.n_qubits},
        )
    if config.scenario == "fig6" and config.n_qubits > FIG6_MAX_QUBITS:
        raise ConfigError(f"scenario fig6 is capped at N <= {FIG6_MAX_QUBITS}", line=line_of("scenario", "n_qubits"))
    for name in ("trajectories", "realizations", "samples", "sample_stride", "bins"):
        if getattr(config, name) < 1:
            raise ConfigError(f"'{name}' must be positive", line=line_of(name))
    if config.samples % 2:
        raise ConfigError("'samples' must be even", line=line_of("samples"))
    for name in ("dt", "tau_max"):
        value = getattr(config, name)
        if value is not None and not value > 0:
            raise ConfigError(f"'{name}' must be positive", line=line_of(name))
    if not config.record_factor >= 1.0:
        raise ConfigError("'record_factor' must be at least 1", line=line_of("record_factor"))


def parse_config(text: str) -> RunConfig:
    """
    Parse configuration text into a validated :class:`RunConfig`.

    Blank lines and ``#`` comments are ignored; missing keys take their defaults.

    Raises
    ------
    ConfigError
        On a malformed line, an unknown or repeated key, a type error or an incompatible
        solver/scenario pair, with the 1-based line number.
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError("expected key=value", line=number, details={"text": raw_line.strip()})
        key, raw = stripped.split("=", 1)
        name, value = coerce_value(key, raw, number)
        if name in values:
            raise ConfigError(f"duplicate key '{key.strip()}'", line=number, details={"first": lines[name]})
        values[name] = value
        lines[name] = number
    config = RunConfig(**values)
    _validate(config, lines)
    return config


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Write every set field as ``key=value``; parsing the result returns an equal config."""
    out: List[str] = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        out.append(f"{_key_for_field(f.name)}={_format(value)}")
    return "\n".join(out) + "\n"


def apply_overrides(config: RunConfig, pairs: Iterable[str]) -> RunConfig:
    """
    Apply ``key=value`` overrides (from ``--set`` or mirrored flags) and revalidate.

    Raises
    ------
    ConfigError
        For malformed pairs, unknown keys or an invalid resulting configuration.
    """
    updates: Dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError("override must be key=value", details={"override": pair})
        key, raw = pair.split("=", 1)
        name, value = coerce_value(key, raw)
        updates[name] = value
    updated = replace(config, **updates)
    _validate(updated, {})
    return updated


def with_value(config: RunConfig, key: str, value: float) -> RunConfig:
    """Copy of ``config`` with one numeric key set (used by sweeps)."""
    name, converted = coerce_value(key, repr(float(value)))
    return replace(config, **{name: converted})


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the serialized configuration."""
    return hashlib.sha256(serialize_config(config).encode("utf-8")).hexdigest()


def resolve_worker_count(n_tasks: int, max_workers: Optional[int] = None) -> int:
    """
    Worker-pool size: ``max_workers`` or the CPU count, capped by SIM_THREADS and the task count.
    """
    limit = max_workers or os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            limit = min(limit, max(1, int(env)))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, env)
    return max(1, min(limit, n_tasks))
