"""
Experiment orchestration: expand an experiment document into run
configurations, execute them with cached exact energies, and turn stored
trajectories into per-figure CSV tables.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from .adapt import AdaptConfig, Trajectory, run_adapt
from .config_validator import ConfigurationError, validate_experiment_spec
from .model import build_hamiltonian, get_preset
from .record_manager import E0Cache, RecordManager
from .settings import SCHWINGER_SETTINGS
from .statevector import ground_state

logger = logging.getLogger(__name__)

RUN_FIELDS = ('options', 'reference', 'epsilon', 'tetris', 'max_iterations', 'cnot_budget', 'feval_budget',
              'seed', 'tie_break_seed', 'lattice_spacing', 'exponential_mode', 'workers', 'gradient_tolerance',
              'e0_method', 'track_fidelity')

FIGURE_CLASSES = ('energy', 'gradient', 'charge', 'cnot', 'cnot_budget', 'feval_budget',
                  'time_reversal', 'depth_cutoff', 'fidelity')

DEFAULT_CUTOFFS = {'cnot_budget': 1000, 'feval_budget': 100, 'depth_cutoff': 1500}

_ITERATION_COLUMNS = {
    'energy_density_error': 'energy_density_error',
    'max_grad': 'max_pool_gradient',
    'charge_mean': 'charge_mean',
    'charge_var': 'charge_variance',
    'cnot_count': 'cnot_count',
    'cnot_depth': 'cnot_depth',
    'optimized_cnot_depth': 'optimized_cnot_depth',
    'fevals': 'function_evaluations',
    'delta_T': 'delta_t',
    'surface_flag': 'surface_selected',
    't_even_selected': 't_even_selected',
    'energy': 'energy',
}

_FIGURE_COLUMNS = {
    'energy': ['iteration', 'energy', 'energy_density_error', 'surface_flag', 'cnot_depth'],
    'gradient': ['iteration', 'max_grad', 'energy_density_error'],
    'charge': ['iteration', 'charge_mean', 'charge_var', 'energy_density_error'],
    'cnot': ['iteration', 'cnot_count', 'cnot_depth', 'optimized_cnot_depth', 'energy_density_error'],
    'time_reversal': ['iteration', 'delta_T', 't_even_selected', 'energy_density_error'],
}


def _sizes(value: Union[List[int], Dict[str, int]]) -> List[int]:
    if isinstance(value, dict):
        return list(range(int(value['min']), int(value['max']) + 1))
    return [int(v) for v in value]


@dataclass
class ExperimentSpec:
    """Pools x presets x sizes, optionally repeated for variant settings"""

    pools: List[str]
    presets: List[str] = field(default_factory=lambda: ['C'])
    L: List[int] = field(default_factory=lambda: [2])
    run: Dict[str, Any] = field(default_factory=dict)
    variants: List[Dict[str, Any]] = field(default_factory=list)
    output_dir: str = field(default_factory=lambda: SCHWINGER_SETTINGS['OUTPUT_DIR'])
    jobs: int = field(default_factory=lambda: SCHWINGER_SETTINGS['JOBS'])
    allow_large: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentSpec':
        """
        Raises:
            ConfigurationError: If the document fails validation
        """
        validator = validate_experiment_spec(data)
        validator.raise_for_errors()
        for warning in validator.get_warnings():
            logger.warning(warning)
        return cls(
            pools=list(data['pools']),
            presets=[str(p).upper() for p in data.get('presets', ['C'])],
            L=_sizes(data['L']),
            run={k: data[k] for k in RUN_FIELDS if k in data},
            variants=list(data.get('variants', [])),
            output_dir=data.get('output_dir', SCHWINGER_SETTINGS['OUTPUT_DIR']),
            jobs=int(data.get('jobs', SCHWINGER_SETTINGS['JOBS'])),
            allow_large=bool(data.get('allow_large', False)),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'ExperimentSpec':
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read experiment {path}: {e}")
        return cls.from_dict(data)

    def expand(self) -> List[AdaptConfig]:
        """
        One AdaptConfig per (variant, pool, preset, L); variants override run
        fields and may restrict the pool list.

        Raises:
            ConfigurationError: If the expansion is empty
        """
        configs = []
        for variant in self.variants or [{}]:
            settings = dict(self.run)
            overrides = {k: v for k, v in variant.items() if k != 'pools'}
            if 'options' in overrides:
                settings['options'] = {**settings.get('options', {}), **overrides.pop('options')}
            settings.update(overrides)
            for pool_id in variant.get('pools', self.pools):
                for preset in self.presets:
                    for size in self.L:
                        try:
                            configs.append(AdaptConfig.from_dict({**settings, 'pool_id': pool_id,
                                                                  'preset': preset, 'L': size}))
                        except ValueError as e:
                            raise ConfigurationError(f"{pool_id}/{preset}/L={size}: {e}")
        if not configs:
            raise ConfigurationError("experiment expands to no runs")
        return configs


@dataclass
class ExperimentResult:
    """Outcome of one batch"""

    paths: List[Path] = field(default_factory=list)
    skipped: List[Path] = field(default_factory=list)
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def exact_energy(cache: E0Cache, preset: str, a: float, L: int, method: str = 'auto') -> float:
    """Cached exact ground energy for one model point."""
    entry = cache.get(preset, a, L, method)
    if entry is not None:
        return float(entry['energy'])
    result = ground_state(build_hamiltonian(get_preset(preset).params(L, a)), method=method)
    cache.put(preset, a, L, method, result.energy, result.residual)
    return result.energy


def _execute(config_data: Dict[str, Any], e0: float, output_dir: str) -> str:
    # the parent process owns the index
    config = AdaptConfig.from_dict(config_data)
    trajectory = run_adapt(config, e0=e0)
    return str(RecordManager(output_dir).save_trajectory(trajectory, index=False))


def run_experiment(spec: ExperimentSpec, force: bool = False) -> ExperimentResult:
    """
    Run every configuration of the experiment, skipping ones already stored.

    Exact energies are computed once per (preset, a, L, method) before any
    run starts.  A failing run is logged and recorded; the batch continues.
    """
    manager = RecordManager(spec.output_dir)
    cache = E0Cache(spec.output_dir)
    result = ExperimentResult()

    pending: List[Tuple[AdaptConfig, float]] = []
    for config in spec.expand():
        if manager.has_run(config) and not force:
            logger.info(f"Skipping {manager.run_id(config)}: already recorded")
            result.skipped.append(manager.path_for(config))
            continue
        try:
            e0 = exact_energy(cache, config.preset, config.lattice_spacing, config.L, config.e0_method)
        except Exception as e:
            logger.error(f"Exact diagonalization failed for {manager.run_id(config)}: {e}")
            result.failures[manager.run_id(config)] = str(e)
            continue
        pending.append((config, e0))

    logger.info(f"Running {len(pending)} configurations with {spec.jobs} job(s)")
    if spec.jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as executor:
            futures = {executor.submit(_execute, config.to_dict(), e0, spec.output_dir): config
                       for config, e0 in pending}
            for future in as_completed(futures):
                config = futures[future]
                try:
                    path = Path(future.result())
                    manager.index_trajectory(Trajectory.load(path))
                    result.paths.append(path)
                except Exception as e:
                    logger.error(f"Run {manager.run_id(config)} failed: {e}")
                    result.failures[manager.run_id(config)] = str(e)
    else:
        for config, e0 in pending:
            try:
                path = Path(_execute(config.to_dict(), e0, spec.output_dir))
                manager.index_trajectory(Trajectory.load(path))
                result.paths.append(path)
            except Exception as e:
                logger.error(f"Run {manager.run_id(config)} failed: {e}")
                result.failures[manager.run_id(config)] = str(e)
    result.paths.sort()
    return result


# ========== Tables ==========

def load_trajectories(paths: Iterable[Union[str, Path]]) -> List[Trajectory]:
    trajectories = []
    for path in paths:
        path = Path(path)
        files = sorted(p for p in path.glob('*.json') if p.name != 'metadata.json') if path.is_dir() else [path]
        trajectories.extend(Trajectory.load(f) for f in files)
    return trajectories


def _run_columns(trajectory: Trajectory) -> Dict[str, Any]:
    config = trajectory.config
    return {
        'pool_id': config.pool_id,
        'preset': config.preset,
        'L': config.L,
        'reference': config.reference,
        'z_surface_swap': config.options.z_surface_swap,
        't_relax': config.options.t_relax,
        'tetris': config.tetris,
    }


def budget_cut(trajectory: Trajectory, metric: str, limit: float):
    """Last record whose cumulative metric is within the limit (iteration 0 if none)."""
    values = trajectory.metric(metric)
    chosen = 0
    for i, value in enumerate(values):
        if value <= limit:
            chosen = i
    return trajectory.records[chosen]


def _iteration_rows(trajectory: Trajectory, columns: Sequence[str]) -> List[Dict[str, Any]]:
    base = _run_columns(trajectory)
    rows = []
    for record in trajectory.records:
        row = dict(base)
        for column in columns:
            row[column] = getattr(record, _ITERATION_COLUMNS.get(column, column))
        rows.append(row)
    return rows


def figure_table(trajectories: Sequence[Trajectory], figure_class: str,
                 cutoff: Optional[float] = None) -> pd.DataFrame:
    """
    Plot-ready table for one figure class.

    Raises:
        ValueError: For an unknown class or a trajectory missing a required metric
    """
    if figure_class not in FIGURE_CLASSES:
        raise ValueError(f"unknown figure class {figure_class!r}; expected one of {FIGURE_CLASSES}")
    rows: List[Dict[str, Any]] = []

    if figure_class in _FIGURE_COLUMNS:
        for trajectory in trajectories:
            rows.extend(_iteration_rows(trajectory, _FIGURE_COLUMNS[figure_class]))

    elif figure_class in DEFAULT_CUTOFFS:
        limit = DEFAULT_CUTOFFS[figure_class] if cutoff is None else cutoff
        metric = 'function_evaluations' if figure_class == 'feval_budget' else 'cnot_depth'
        for trajectory in trajectories:
            record = budget_cut(trajectory, metric, limit)
            rows.append({**_run_columns(trajectory), 'cutoff': limit, 'iteration': record.iteration,
                         'energy_density_error': record.energy_density_error,
                         'cnot_depth': record.cnot_depth, 'fevals': record.function_evaluations})

    else:
        for trajectory in trajectories:
            final = trajectory.records[-1]
            if final.infidelity is None or 'mean_field_infidelity' not in trajectory.extras:
                raise ValueError(f"trajectory {trajectory.config.pool_id} L={trajectory.config.L} "
                                 f"was run without fidelity tracking")
            rows.append({**_run_columns(trajectory), 'iteration': final.iteration,
                         'energy_density_error': final.energy_density_error,
                         'infidelity': final.infidelity,
                         'mean_field_infidelity': trajectory.extras['mean_field_infidelity'],
                         'final_vs_mean_field_infidelity': trajectory.extras['final_vs_mean_field_infidelity']})

    return pd.DataFrame(rows)


def emit_tables(trajectories: Sequence[Trajectory], figure_class: str, output_dir: Union[str, Path],
                cutoff: Optional[float] = None) -> Path:
    """Write one CSV with a header row for the figure class."""
    table = figure_table(trajectories, figure_class, cutoff)
    path = Path(output_dir) / f"{figure_class}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path
