"""
Command-line interface: ``sim noise|simulate|spectrum|scenario|sweep|circuit``.

Exit codes: 0 on success, 2 for configuration or parameter errors, 3 for numerical failures.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import setup_logging
from .circuit_map import circuit_model_params, format_model_params, load_circuit_csv
from .config import RunConfig, apply_overrides, parse_config
from .exceptions import ConfigError, NumericalError, ParameterError, SimulationError
from .scenario_manager import run_scenario, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# flag -> config key
MIRRORED_FLAGS = {
    "n": "n_qubits",
    "lambda_": "lambda",
    "epsilon": "epsilon",
    "alpha": "alpha",
    "solver": "solver",
    "trajectories": "trajectories",
    "seed": "seed",
    "output_dir": "output_dir",
    "samples": "samples",
    "realizations": "realizations",
    "t_max": "t_max",
    "lambda_grid": "lambda_grid",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key=value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config key (repeatable)")
    parser.add_argument("--n", type=str, help="number of qubits")
    parser.add_argument("--lambda", dest="lambda_", type=str, help="coupling lambda in units of Gamma")
    parser.add_argument("--epsilon", type=str, help="transverse field epsilon in units of Gamma")
    parser.add_argument("--alpha", type=str, help="noise exponent (0 white, 1 pink, -1 blue)")
    parser.add_argument("--solver", type=str, help="markovian, mcwf, tcl or spectral")
    parser.add_argument("--trajectories", type=str, help="number of MCWF trajectories")
    parser.add_argument("--seed", type=str, help="master seed")
    parser.add_argument("--output-dir", dest="output_dir", type=str, help="output directory")
    parser.add_argument("--samples", type=str, help="noise record length")
    parser.add_argument("--realizations", type=str, help="noise realizations")
    parser.add_argument("--t-max", dest="t_max", type=str, help="run length in units of 1/Gamma")
    parser.add_argument("--lambda-grid", dest="lambda_grid", type=str, help="comma-separated lambda values")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--log-file", type=str, help="also log to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Dissipative transverse-field Ising simulations under white and colored noise.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("noise", help="generate noise records, PSDs and kernels"))
    _add_common(sub.add_parser("simulate", help="run one solver (see --solver)"))
    _add_common(sub.add_parser("spectrum", help="Liouvillian decay-rate spectrum over a lambda grid"))

    scenario = sub.add_parser("scenario", help="run a named scenario")
    scenario.add_argument("name", nargs="?", help="noise, fig3, fig4, fig5, fig6 or custom (default: from the config)")
    _add_common(scenario)

    sweep_parser = sub.add_parser("sweep", help="repeat the configured scenario over values of one key")
    sweep_parser.add_argument("--key", required=True, help="numeric config key to sweep")
    sweep_parser.add_argument("--values", required=True, help="comma-separated values")
    _add_common(sweep_parser)

    circuit = sub.add_parser("circuit", help="convert circuit parameters to model parameters")
    circuit.add_argument("csv", type=Path, help="CSV with header c_g,c_j,c_c,e_j,n_qubits")
    circuit.add_argument("--gamma", type=float, required=True, help="noise intensity Gamma in rad/s")
    circuit.add_argument("--f0", type=float, required=True, help="noise sampling frequency in Hz")
    circuit.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    circuit.add_argument("--log-file", type=str, help="also log to this file")
    return parser


def load_config(args: argparse.Namespace, forced: Sequence[str] = ()) -> RunConfig:
    """Config file, then mirrored flags, then ``--set`` overrides, then command-implied keys."""
    config = parse_config(args.config.read_text(encoding="utf-8")) if args.config else RunConfig()
    pairs: List[str] = []
    for attr, key in MIRRORED_FLAGS.items():
        value = getattr(args, attr, None)
        if value is not None:
            pairs.append(f"{key}={value}")
    pairs.extend(args.overrides)
    pairs.extend(forced)
    return apply_overrides(config, pairs) if pairs else config


def _run(args: argparse.Namespace) -> None:
    if args.command == "circuit":
        for i, circuit in enumerate(load_circuit_csv(args.csv)):
            print(f"# circuit {i}")
            print(format_model_params(circuit_model_params(circuit, args.gamma, args.f0)))
        return
    if args.command == "noise":
        manifest, _ = run_scenario(load_config(args, ["scenario=noise"]))
    elif args.command == "simulate":
        manifest, _ = run_scenario(load_config(args, ["scenario=custom"]))
    elif args.command == "spectrum":
        manifest, _ = run_scenario(load_config(args, ["solver=spectral"]), action="spectrum")
    elif args.command == "scenario":
        forced = [f"scenario={args.name}"] if args.name else []
        manifest, _ = run_scenario(load_config(args, forced))
    else:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"invalid sweep values: {exc}") from exc
        rows = sweep(load_config(args), args.key, values)
        print(f"{len(rows)} sweep points written")
        return
    print(f"{len(manifest.files)} files written, config_hash={manifest.config_hash}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``sim`` command."""
    args = build_parser().parse_args(argv)
    setup_logging(level=logging.DEBUG if args.verbose else logging.INFO, log_file=args.log_file)
    try:
        _run(args)
    except (ConfigError, ParameterError) as e:
        logger.error("%s", str(e))
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error("%s", str(e))
        return EXIT_NUMERIC
    except SimulationError as e:
        logger.error("%s", str(e))
        return EXIT_NUMERIC
    except OSError as e:
        logger.error("I/O failure: %s", str(e))
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
