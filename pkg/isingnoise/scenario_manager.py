"""
Scenario manager for configured simulation runs.
"""

import csv
import hashlib
import io
import json
import logging
import math
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import build_product_state
from .config import RunConfig, config_hash, parse_init_state, resolve_worker_count, serialize_config, with_value
from .correlations import analyze_spin_spectrum, spin_psd, two_time_correlation
from .exceptions import ConfigError
from .liouvillian import build_liouvillian, liouvillian_spectrum, metastability_scan, propagate_spectral
from .markovian_solver import MarkovianSolver
from .mcwf_solver import ensemble_average, jump_counts, run_ensemble
from .noise import average_psd, derive_seed, estimate_correlation, estimate_psd, generate_field
from .observables import ground_state_lifetime, magnetization, metastable_value
from .structures import EvolutionGrid, EvolutionResult, ModelParams, pure_density_matrix
from .tcl_solver import TclSolver

logger = logging.getLogger(__name__)

COLORS: Tuple[Tuple[str, float], ...] = (("white", 0.0), ("pink", 1.0), ("blue", -1.0))
FIG3_RATIOS = (1.0, 10.0)
MANIFEST_NAME = "manifest.json"
SERIES_COLUMNS = ("m", "trace_err", "min_eig", "gamma_eff", "w", "entropy")
KERNEL_ROWS = 2000
SWEEP_KEYS = ("n_qubits", "epsilon", "lambda", "gamma", "f0", "t_max", "alpha", "record_factor", "max_phase_step")


@dataclass
class RunManifest:
    """
    Completion record of a run.

    Units:
      - wall_time: seconds.
    """

    config_hash: str
    version: str
    files: Dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_json(self) -> str:
        payload = {"config_hash": self.config_hash, "version": self.version, "files": self.files, "wall_time": self.wall_time}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ScenarioManager:
    """
    Class to run one configured scenario.

    Outputs (all in ``config.output_dir``):
      - noise: noise_<color>.csv, psd_<color>.csv, kernel_<color>.csv, noise_summary.csv.
      - fig3: m_<color>_r<ratio>.csv for lambda/epsilon in {1, 10}.
      - fig4: ensemble.csv, trajectories.csv, jumps.csv, histogram.csv, correlation.csv, psd.csv.
      - fig5: m_<color>.csv (with w and entropy) and lifetime.csv.
      - fig6: spectrum.csv and initial_state.csv.
      - custom: the outputs of ``config.solver``.
    The manifest is written last; files written before a failure are removed.
    """

    def __init__(self, config: RunConfig, max_workers: Optional[int] = None) -> None:
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.max_workers = max_workers
        self.written: List[Path] = []
        self.summary: Dict[str, float] = {}
        self._hash = config_hash(config)

    # ------------------------------------------------------------------ output

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """Write a CSV with a header row and a trailing manifest reference comment."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / name
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        buffer.write(f"# manifest: {MANIFEST_NAME} config_hash={self._hash}\n")
        path.write_text(buffer.getvalue(), encoding="utf-8")
        self.written.append(path)
        logger.debug("Wrote %s (%d rows)", path, len(rows))
        return path

    def _write_series(self, name: str, result: EvolutionResult) -> None:
        columns = [c for c in SERIES_COLUMNS if c in result.series]
        rows = [[t] + [result.series[c][i] for c in columns] for i, t in enumerate(result.times)]
        self.write_csv(name, ["t"] + columns, rows)

    def _cleanup(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
            except OSError as e:
                logger.warning("Failed to remove partial output %s: %s", path, str(e))
        self.written = []

    def _map(self, func: Callable[[Any], Any], items: Sequence[Any]) -> List[Any]:
        if not items:
            return []
        with ThreadPoolExecutor(max_workers=resolve_worker_count(len(items), self.max_workers)) as pool:
            return list(pool.map(func, items))

    # ------------------------------------------------------------------ helpers

    def _grid(self, params: ModelParams, noise_grid: bool = False) -> EvolutionGrid:
        dt = None if noise_grid else self.config.dt
        return EvolutionGrid.for_model(params, sample_stride=self.config.sample_stride, dt=dt)

    def _initial_state(self, params: ModelParams, spec: Optional[str] = None) -> np.ndarray:
        return build_product_state(parse_init_state(spec or self.config.init_state), params)

    def _markovian(self, params: ModelParams, rho0: np.ndarray) -> EvolutionResult:
        solver = MarkovianSolver(params, self._grid(params), max_phase_step=self.config.max_phase_step)
        return solver.evolve(rho0)

    def _tcl(self, params: ModelParams, alpha: float, rho0: np.ndarray, track: bool = False) -> EvolutionResult:
        solver = TclSolver(
            params,
            alpha,
            self._grid(params, noise_grid=True),
            kernel_source=self.config.kernel_source,
            approximation=self.config.approximation,
            realizations=self.config.realizations,
            seed=self.config.seed,
            record_factor=self.config.record_factor,
            max_phase_step=self.config.max_phase_step,
            allow_strong_noise=self.config.allow_strong_noise,
            track_ground_state=track,
            track_entropy=track,
        )
        return solver.evolve(rho0)

    # ------------------------------------------------------------------ scenarios

    def run_noise(self) -> None:
        """Sample records, PSD estimates and correlation kernels for white, pink and blue noise."""
        c = self.config
        summary_rows = []
        for color, alpha in COLORS:
            fields = [generate_field(1, c.samples, alpha, derive_seed(c.seed, r), c.f0) for r in range(c.realizations)]
            first = fields[0][0]
            self.write_csv(f"noise_{color}.csv", ["t", "value"], list(zip(first.times(), first.samples)))
            psd = average_psd([estimate_psd(f[0]) for f in fields])
            self.write_csv(f"psd_{color}.csv", ["f", "psd"], list(zip(psd.freqs, psd.values)))
            if c.realizations >= 2:
                kernel = estimate_correlation(fields, 1, 1)
                n = min(KERNEL_ROWS, len(kernel.kappa))
                stderr = kernel.stderr if kernel.stderr is not None else np.zeros(len(kernel.kappa))
                self.write_csv(f"kernel_{color}.csv", ["tau", "kappa", "stderr"], list(zip(kernel.taus()[:n], kernel.kappa[:n], stderr[:n])))
            slope = psd.loglog_slope(c.f0 / 100.0, c.f0 / 2.0)
            nyquist = float(np.mean(psd.values[-max(1, len(psd.values) // 10):]))
            summary_rows.append([color, alpha, slope, nyquist])
            self.summary[f"slope_{color}"] = slope
        self.write_csv("noise_summary.csv", ["color", "alpha", "slope", "nyquist_psd"], summary_rows)

    def run_fig3(self) -> None:
        """m(t) from the unpolarized state for three noise colors and lambda/epsilon in {1, 10}."""
        c = self.config
        tasks = [(color, alpha, ratio) for color, alpha in COLORS for ratio in FIG3_RATIOS]

        def task(item: Tuple[str, float, float]) -> EvolutionResult:
            _, alpha, ratio = item
            params = replace(c.model, lambda_=ratio * c.epsilon)
            rho0 = pure_density_matrix(self._initial_state(params, "unpolarized"))
            if alpha == 0 and c.solver == "markovian":
                return self._markovian(params, rho0)
            return self._tcl(params, alpha, rho0)

        for (color, _, ratio), result in zip(tasks, self._map(task, tasks)):
            self._write_series(f"m_{color}_r{ratio:g}.csv", result)
            self.summary[f"m_ms_{color}_r{ratio:g}"] = metastable_value(result.observable("m"), c.t_max)

    def _write_trajectories(self, params: ModelParams) -> None:
        c = self.config
        psi0 = self._initial_state(params)
        records = run_ensemble(psi0, params, c.trajectories, c.seed, self._grid(params), c.mcwf_method, self.max_workers)
        self.write_csv(
            "trajectories.csv",
            ["seed", "n_jumps_up", "n_jumps_down", "m_ms"],
            [[r.seed, r.n_jumps_up, r.n_jumps_down, r.m_ms] for r in records],
        )
        self.write_csv(
            "jumps.csv",
            ["traj_seed", "time", "qubit", "direction"],
            [[r.seed, j.time, j.qubit, j.direction] for r in records for j in r.jumps],
        )
        counts = jump_counts(records)
        self.summary.update({"n_raising": counts["raising"], "n_lowering": counts["lowering"]})
        if len(records) < 2:
            logger.warning("Ensemble statistics need at least two trajectories; skipping ensemble.csv")
            self.summary["m_ms"] = records[0].m_ms
            return
        ensemble = ensemble_average(records, bins=c.bins)
        self.write_csv("ensemble.csv", ["t", "m", "stderr"], list(zip(ensemble.times, ensemble.mean, ensemble.stderr)))
        edges = ensemble.bin_edges
        self.write_csv("histogram.csv", ["bin_left", "bin_right", "count"], list(zip(edges[:-1], edges[1:], ensemble.histogram)))
        self.summary.update({"m_ms": ensemble.m_ms_mean, "m_ms_std": ensemble.m_ms_std})

    def run_fig4(self) -> None:
        """MCWF jump statistics plus regression correlations and the spin PSD."""
        c = self.config
        params = c.model
        self._write_trajectories(params)
        dtau = c.dt or params.noise_dt
        tau_max = c.tau_max or c.t_max
        taus = np.arange(int(round(tau_max / dtau)) + 1) * dtau
        corr = two_time_correlation(params, c.t_ref, taus, method=c.correlation_method, max_phase_step=c.max_phase_step)
        self.write_csv("correlation.csv", ["tau", "c_a", "c_c"], list(zip(corr.taus, corr.c_a, corr.c_c)))
        psd = spin_psd(corr.taus, corr.c_a)
        self.write_csv("psd.csv", ["omega", "s_sigma"], list(zip(psd.omegas, psd.values)))
        self.summary["central_fwhm"] = analyze_spin_spectrum(psd, params).central_fwhm

    def run_fig5(self) -> None:
        """Ground-state start: m, w and entropy for three noise colors, with the 1/e lifetime of w."""
        c = self.config
        params = c.model
        rho0 = pure_density_matrix(self._initial_state(params, "ground"))
        results = self._map(lambda item: self._tcl(params, item[1], rho0, track=True), list(COLORS))
        rows = []
        for (color, alpha), result in zip(COLORS, results):
            self._write_series(f"m_{color}.csv", result)
            lifetime = ground_state_lifetime(result.observable("w"))
            rows.append([color, alpha, lifetime.value, lifetime.censored])
            self.summary[f"tau_g_{color}"] = lifetime.value
        self.write_csv("lifetime.csv", ["color", "alpha", "tau_g", "censored"], rows)

    def run_fig6(self) -> None:
        """Liouvillian spectrum over the lambda grid and the initial-state map of m_ms."""
        c = self.config
        params = c.model
        self.run_spectrum()
        amplitudes = np.linspace(0.0, 1.0, 5)
        phases = np.linspace(0.0, 2.0 * np.pi, 4, endpoint=False)
        states = [(float(a), float(p)) for a in amplitudes for p in phases]
        scan = metastability_scan(params, [c.lambda_], n_modes=1, initial_states=states, max_workers=self.max_workers)
        self.write_csv("initial_state.csv", ["amplitude", "phase", "m_ms"], [[a, p, m] for _, a, p, m in scan.initial_state_map])

    def run_spectrum(self) -> None:
        """Full decay-rate spectrum for each lambda of the grid (or the configured lambda)."""
        c = self.config
        params = c.model
        grid = list(c.lambda_grid) or [c.lambda_]
        scan = metastability_scan(params, grid, n_modes=params.dim**2, max_workers=self.max_workers)
        rows = [[lam, mu, g, b] for lam, gs, bs in zip(scan.lambdas, scan.rates, scan.betas) for mu, (g, b) in enumerate(zip(gs, bs))]
        self.write_csv("spectrum.csv", ["lambda", "mu", "gamma", "beta"], rows)
        if scan.rates.shape[1] > 1:
            self.summary["gamma_1"] = float(scan.rates[-1, 1])

    def run_custom(self) -> None:
        """Single run of the configured solver."""
        c = self.config
        params = c.model
        if c.solver == "mcwf":
            self._write_trajectories(params)
            return
        rho0 = pure_density_matrix(self._initial_state(params))
        if c.solver == "markovian":
            result = self._markovian(params, rho0)
        elif c.solver == "tcl":
            result = self._tcl(params, c.alpha, rho0)
        else:
            spec = liouvillian_spectrum(build_liouvillian(params))
            grid = self._grid(params)
            rows = []
            for t in grid.sample_times():
                rho = propagate_spectral(rho0, spec, float(t))
                herm = 0.5 * (rho + rho.conj().T)
                rows.append([t, magnetization(rho, params), abs(np.trace(rho) - 1.0), float(np.linalg.eigvalsh(herm)[0])])
            self.write_csv("m_series.csv", ["t", "m", "trace_err", "min_eig"], rows)
            self.summary["m_ms"] = float(rows[-1][1])
            self.summary["gamma_1"] = float(spec.gammas[1]) if len(spec.gammas) > 1 else math.nan
            return
        self._write_series("m_series.csv", result)
        self.summary["m_ms"] = metastable_value(result.observable("m"), c.t_max)

    # ------------------------------------------------------------------ driver

    def run(self, action: Optional[str] = None) -> RunManifest:
        """
        Run ``action`` (default: the configured scenario) and write the manifest.

        Raises
        ------
        SimulationError
            Any solver error, after partial outputs have been removed.
        """
        from . import __version__

        actions: Dict[str, Callable[[], None]] = {
            "noise": self.run_noise,
            "fig3": self.run_fig3,
            "fig4": self.run_fig4,
            "fig5": self.run_fig5,
            "fig6": self.run_fig6,
            "custom": self.run_custom,
            "spectrum": self.run_spectrum,
        }
        name = action or self.config.scenario
        if name not in actions:
            raise ConfigError(f"unknown scenario '{name}'")
        logger.info("Starting %s run in %s", name, self.output_dir)
        start = time.perf_counter()
        try:
            actions[name]()
            config_path = self.output_dir / "config.txt"
            self.output_dir.mkdir(parents=True, exist_ok=True)
            config_path.write_text(serialize_config(self.config), encoding="utf-8")
            self.written.append(config_path)
            manifest = RunManifest(
                config_hash=self._hash,
                version=__version__,
                files={p.name: _sha256(p) for p in self.written},
                wall_time=time.perf_counter() - start,
            )
            (self.output_dir / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
        except Exception:
            logger.error("Run %s failed; removing %d partial outputs", name, len(self.written))
            self._cleanup()
            raise
        logger.info("Finished %s run: %d files in %.1f s", name, len(manifest.files), manifest.wall_time)
        return manifest


def _remove_sweep_outputs(base: Path, directories: Sequence[Path]) -> None:
    for directory in directories:
        shutil.rmtree(directory, ignore_errors=True)
    for name in ("sweep.csv", MANIFEST_NAME):
        try:
            (base / name).unlink()
        except FileNotFoundError:
            pass


def run_scenario(config: RunConfig, action: Optional[str] = None, max_workers: Optional[int] = None) -> Tuple[RunManifest, Dict[str, float]]:
    """Run one scenario and return its manifest and scalar summaries."""
    manager = ScenarioManager(config, max_workers)
    manifest = manager.run(action)
    return manifest, manager.summary


def sweep(
    config: RunConfig,
    key: str,
    values: Sequence[float],
    action: Optional[str] = None,
    max_workers: Optional[int] = None,
) -> List[Dict[str, float]]:
    """
    Run the scenario once per value of ``key`` and collect the scalar summaries.

    Point i uses the seed derived from (config.seed, i) and writes into
    ``<output_dir>/<key>_<i>``; rows follow the order of ``values``. The table is written to
    ``<output_dir>/sweep.csv``.

    Raises
    ------
    ConfigError
        If ``key`` is not a sweepable numeric field.
    SimulationError
        From the first failing point, after the point directories created by this call and
        any sweep table have been removed.
    """
    if key not in SWEEP_KEYS:
        raise ConfigError(f"'{key}' is not a sweepable numeric key", details={"sweepable": ", ".join(SWEEP_KEYS)})
    base = Path(config.output_dir)
    points = []
    for i, value in enumerate(values):
        point = with_value(config, key, value)
        points.append(replace(point, seed=derive_seed(config.seed, i), output_dir=str(base / f"{key}_{i:03d}")))

    def task(point: RunConfig) -> Dict[str, float]:
        return run_scenario(point, action, max_workers=1)[1]

    created = [Path(p.output_dir) for p in points if not Path(p.output_dir).exists()]
    workers = resolve_worker_count(len(points), max_workers)
    summaries: List[Dict[str, float]] = []
    if points:
        try:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                summaries = list(pool.map(task, points))
        except Exception:
            logger.error("Sweep over %s failed; removing %d point directories", key, len(created))
            _remove_sweep_outputs(base, created)
            raise
    rows = [dict({key: float(v)}, **s) for v, s in zip(values, summaries)]

    columns = sorted({name for s in summaries for name in s})
    writer = ScenarioManager(config)
    writer.write_csv("sweep.csv", [key] + columns, [[r[key]] + [r.get(c, math.nan) for c in columns] for r in rows])
    from . import __version__

    manifest = RunManifest(config_hash=config_hash(config), version=__version__, files={p.name: _sha256(p) for p in writer.written})
    (base / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")
    logger.info("Sweep over %s finished: %d points", key, len(rows))
    return rows

