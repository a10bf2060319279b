"""
Adaptive ansatz growth.

Each iteration screens every pool operator's energy gradient on the current
state, stops when the largest |G| is below epsilon, otherwise appends the
TETRIS batch (greedy disjoint supports) with zero angles and re-optimizes
all angles.  Every iteration, including the reference state as iteration 0,
is recorded in the Trajectory.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .diagnostics import charge_moments, delta_t, energy_density_error, mean_field
from .exceptions import ReplayError, SchwingerAdaptError, SerializationError
from .model import REFERENCE_KINDS, ModelParams, build_hamiltonian, charge_operator, get_preset, reference_state
from .optimizer import GRADIENT_TOLERANCE, ObjectiveHandle, minimize
from .pauli import PauliSum, is_time_reversal_odd
from .pools import OperatorPool, PoolOperator, PoolOptions, build_pool
from .resources import ansatz_resources
from .settings import SCHWINGER_SETTINGS
from .statevector import EXPONENTIAL_MODES, Statevector, apply_pauli_sum, fidelity, gradient_from_action, ground_state
from .utils import get_version, validate_choice, validate_pool_id, validate_preset_label

logger = logging.getLogger(__name__)

TERMINATION_REASONS = ('converged', 'max_iterations', 'cnot_budget', 'feval_budget')
ADAPT_REFERENCES = REFERENCE_KINDS + ('mean_field',)
TRAJECTORY_FORMAT = 1
REPLAY_TOLERANCE = 1e-10
GRADIENT_ROUNDING = 10

Scored = List[Tuple[PoolOperator, float]]


@dataclass(frozen=True)
class AdaptConfig:
    """Everything that determines an adaptive run"""

    pool_id: str = 'xQZ'
    L: int = 2
    preset: str = 'C'
    options: PoolOptions = field(default_factory=PoolOptions)
    reference: str = 'staggered_vacuum'
    epsilon: float = 1e-3
    tetris: bool = True
    max_iterations: int = 200
    cnot_budget: Optional[int] = None
    feval_budget: Optional[int] = None
    seed: int = 0
    tie_break_seed: Optional[int] = None
    lattice_spacing: float = 1.0
    exponential_mode: str = 'exact'
    workers: int = 1
    gradient_tolerance: float = GRADIENT_TOLERANCE
    e0_method: str = 'auto'
    track_fidelity: bool = False

    def __post_init__(self):
        validate_pool_id(self.pool_id)
        object.__setattr__(self, 'preset', validate_preset_label(self.preset))
        validate_choice(self.reference, ADAPT_REFERENCES, 'reference')
        validate_choice(self.exponential_mode, EXPONENTIAL_MODES, 'exponential_mode')
        validate_choice(self.e0_method, ('auto', 'dense', 'lanczos'), 'e0_method')
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.L < 1:
            raise ValueError(f"L must be at least 1, got {self.L}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if isinstance(self.options, dict):
            object.__setattr__(self, 'options', PoolOptions.from_dict(self.options))

    @property
    def params(self) -> ModelParams:
        return get_preset(self.preset).params(self.L, self.lattice_spacing)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['options'] = self.options.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AdaptConfig':
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown run settings: {', '.join(sorted(unknown))}")
        data['options'] = PoolOptions.from_dict(data.get('options'))
        return cls(**data)


@dataclass
class AnsatzStep:
    """One (operator, angle) layer"""

    operator: PoolOperator
    theta: float
    iteration: int
    gradient: float


@dataclass
class IterationRecord:
    """Metrics of the state after one iteration (iteration 0 is the reference)"""

    iteration: int
    energy: float
    energy_density_error: float
    max_pool_gradient: float
    selected: List[str] = field(default_factory=list)
    selected_gradients: List[float] = field(default_factory=list)
    charge_mean: float = 0.0
    charge_variance: float = 0.0
    delta_t: float = 0.0
    cnot_count: int = 0
    cnot_depth: int = 0
    rz_count: int = 0
    optimized_cnot_count: int = 0
    optimized_cnot_depth: int = 0
    function_evaluations: int = 0
    gradient_evaluations: int = 0
    surface_selected: bool = False
    t_even_selected: int = 0
    n_parameters: int = 0
    optimizer_iterations: int = 0
    line_search_failed: bool = False
    infidelity: Optional[float] = None


METRIC_FIELDS = tuple(f.name for f in fields(IterationRecord))


@dataclass
class Trajectory:
    """Record of one adaptive run"""

    config: AdaptConfig
    e0: float
    reference_energy: float
    records: List[IterationRecord] = field(default_factory=list)
    steps: List[AnsatzStep] = field(default_factory=list)
    termination: str = 'converged'
    version: str = field(default_factory=get_version)
    extras: Dict[str, Any] = field(default_factory=dict)
    final_state: Optional[Statevector] = field(default=None, repr=False, compare=False)

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy if self.records else self.reference_energy

    @property
    def thetas(self) -> List[float]:
        return [s.theta for s in self.steps]

    def metric(self, name: str) -> List[Any]:
        if name not in METRIC_FIELDS:
            raise KeyError(f"unknown metric {name!r}")
        return [getattr(r, name) for r in self.records]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format': TRAJECTORY_FORMAT,
            'version': self.version,
            'config': self.config.to_dict(),
            'seeds': {
                'seed': self.config.seed,
                'tie_break_seed': self.config.tie_break_seed,
                'lanczos_seed': SCHWINGER_SETTINGS['LANCZOS_SEED'],
            },
            'e0': self.e0,
            'reference_energy': self.reference_energy,
            'termination': self.termination,
            'metrics': {name: self.metric(name) for name in METRIC_FIELDS},
            'steps': [
                {
                    'label': s.operator.label,
                    'theta': s.theta,
                    'iteration': s.iteration,
                    'gradient': s.gradient,
                    'kind': s.operator.kind,
                    'distance': s.operator.distance,
                    'offset': s.operator.offset,
                    'cp_symmetric': s.operator.cp_symmetric,
                    'operator': s.operator.serialization,
                }
                for s in self.steps
            ],
            'extras': self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Trajectory':
        """
        Raises:
            SerializationError: If required fields are missing or malformed
        """
        try:
            config = AdaptConfig.from_dict(data['config'])
            n = 2 * config.L
            metrics = data['metrics']
            length = len(metrics['iteration'])
            records = [IterationRecord(**{name: metrics[name][i] for name in METRIC_FIELDS if name in metrics})
                       for i in range(length)]
            steps = []
            for entry in data['steps']:
                op = PoolOperator(label=entry['label'], op=PauliSum.from_text(entry['operator'], n=n),
                                  kind=entry['kind'], distance=entry['distance'], offset=entry['offset'],
                                  pool_id=config.pool_id, cp_symmetric=entry.get('cp_symmetric', False))
                steps.append(AnsatzStep(op, float(entry['theta']), int(entry['iteration']), float(entry['gradient'])))
            termination = data['termination']
            if termination not in TERMINATION_REASONS:
                raise ValueError(f"unknown termination reason {termination!r}")
            return cls(config=config, e0=float(data['e0']), reference_energy=float(data['reference_energy']),
                       records=records, steps=steps, termination=termination,
                       version=data.get('version', get_version()), extras=data.get('extras', {}))
        except SerializationError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise SerializationError(f"malformed trajectory: {e}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Trajectory':
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise SerializationError(f"cannot read trajectory {path}: {e}")
        return cls.from_dict(data)


# ========== Selection ==========

def screen_gradients(state, pool: Sequence[PoolOperator], hamiltonian: PauliSum, workers: int = 1) -> Scored:
    """
    Energy gradient of every pool operator on a frozen state, in pool order.

    With workers > 1 the evaluations fan out over a thread pool; results are
    joined in pool order.
    """
    vec = state.amps if isinstance(state, Statevector) else np.asarray(state)
    h_vec = apply_pauli_sum(vec, hamiltonian)
    operators = list(pool)

    def score(pool_op: PoolOperator) -> float:
        return gradient_from_action(h_vec, vec, pool_op.op)

    if workers > 1 and len(operators) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            grads = list(executor.map(score, operators))
    else:
        grads = [score(p) for p in operators]
    return list(zip(operators, grads))


def rank_scored(scored: Scored, rng: Optional[np.random.Generator] = None) -> Scored:
    """
    Order by |G| descending (rounded to 1e-10), ties broken by operator
    serialization or, given an rng, by a random permutation.
    """
    if rng is None:
        return sorted(scored, key=lambda item: (-round(abs(item[1]), GRADIENT_ROUNDING), item[0].serialization))
    ranks = rng.permutation(len(scored))
    order = sorted(range(len(scored)), key=lambda i: (-round(abs(scored[i][1]), GRADIENT_ROUNDING), ranks[i]))
    return [scored[i] for i in order]


def tetris_select(scored: Scored, epsilon: float, tetris: bool = True) -> Scored:
    """
    Greedy batch of operators with |G| >= epsilon and pairwise disjoint
    supports, taken from a ranked list.  Without TETRIS only the top
    operator is taken.
    """
    batch: Scored = []
    used = set()
    for pool_op, grad in scored:
        if abs(grad) < epsilon:
            break
        support = pool_op.support
        if used & support:
            continue
        batch.append((pool_op, grad))
        used |= support
        if not tetris:
            break
    return batch


# ========== Run ==========

def initial_state(config: AdaptConfig, hamiltonian: PauliSum) -> Statevector:
    if config.reference == 'mean_field':
        return mean_field(hamiltonian, config.L).state
    return reference_state(config.L, config.reference)


def _record(iteration: int, energy: float, e0: float, state: np.ndarray, ranked: Scored, batch: Scored,
            steps: List[AnsatzStep], charge: PauliSum, counters: Dict[str, int], optimizer_result=None,
            ground: Optional[Statevector] = None) -> IterationRecord:
    mean, variance = charge_moments(state, charge)
    resources = ansatz_resources([s.operator for s in steps], [s.theta for s in steps])
    return IterationRecord(
        iteration=iteration,
        energy=energy,
        energy_density_error=energy_density_error(energy, e0, charge.n // 2),
        max_pool_gradient=abs(ranked[0][1]) if ranked else 0.0,
        selected=[p.label for p, _ in batch],
        selected_gradients=[g for _, g in batch],
        charge_mean=mean,
        charge_variance=variance,
        delta_t=delta_t(state),
        cnot_count=resources.cnot_count,
        cnot_depth=resources.cnot_depth,
        rz_count=resources.rz_count,
        optimized_cnot_count=resources.optimized_cnot_count,
        optimized_cnot_depth=resources.optimized_cnot_depth,
        function_evaluations=counters['fevals'],
        gradient_evaluations=counters['gevals'],
        surface_selected=any(p.kind == 'surface' for p, _ in batch),
        t_even_selected=sum(1 for p, _ in batch if not is_time_reversal_odd(p.op)),
        n_parameters=len(steps),
        optimizer_iterations=optimizer_result.iterations if optimizer_result else 0,
        line_search_failed=optimizer_result.line_search_failed if optimizer_result else False,
        infidelity=None if ground is None else 1.0 - fidelity(state, ground),
    )


def run_adapt(config: AdaptConfig, e0: Optional[float] = None, pool: Optional[OperatorPool] = None) -> Trajectory:
    """
    Grow and optimize the ansatz until the largest pool gradient falls below
    epsilon or a limit is hit.

    Args:
        config: Run settings
        e0: Exact ground energy, computed when omitted
        pool: Prebuilt pool, built from the config when omitted

    Raises:
        SchwingerAdaptError: Inner failures, with the iteration prefixed to the message
    """
    params = config.params
    hamiltonian = build_hamiltonian(params)
    if pool is None:
        pool = build_pool(config.pool_id, config.L, config.options, preset=config.preset)
    elif pool.L != config.L:
        raise ValueError(f"pool built for L={pool.L}, run asks for L={config.L}")

    ground = None
    if e0 is None or config.track_fidelity:
        exact = ground_state(hamiltonian, method=config.e0_method)
        ground = exact.state if config.track_fidelity else None
        if e0 is None:
            e0 = exact.energy

    reference = initial_state(config, hamiltonian)
    charge = charge_operator(config.L)
    rng = np.random.default_rng(config.tie_break_seed) if config.tie_break_seed is not None else None
    counters = {'fevals': 0, 'gevals': 0}

    steps: List[AnsatzStep] = []
    theta = np.zeros(0)
    handle = ObjectiveHandle(hamiltonian, reference, [], config.exponential_mode)
    state = handle.state(theta)
    energy = handle.evaluate(theta)
    reference_energy = energy
    ranked = rank_scored(screen_gradients(state, pool, hamiltonian, config.workers), rng)
    records = [_record(0, energy, e0, state, ranked, [], steps, charge, counters, ground=ground)]
    logger.info(f"ADAPT {config.pool_id} L={config.L} preset={config.preset}: {len(pool)} operators, "
                f"E_ref={energy:.10f}, E0={e0:.10f}")

    iteration = 0
    while True:
        if records[-1].max_pool_gradient < config.epsilon:
            termination = 'converged'
            break
        if iteration >= config.max_iterations:
            termination = 'max_iterations'
            break
        batch = tetris_select(ranked, config.epsilon, config.tetris)
        iteration += 1
        steps.extend(AnsatzStep(p, 0.0, iteration, g) for p, g in batch)

        try:
            handle = ObjectiveHandle(hamiltonian, reference, [s.operator.op for s in steps], config.exponential_mode)
            result = minimize(handle, np.append(theta, np.zeros(len(batch))), gtol=config.gradient_tolerance)
            theta = result.theta
            state = handle.state(theta)
            ranked = rank_scored(screen_gradients(state, pool, hamiltonian, config.workers), rng)
        except SchwingerAdaptError as e:
            raise type(e)(f"iteration {iteration}: {e}") from e

        for step, angle in zip(steps, theta):
            step.theta = float(angle)
        counters['fevals'] += result.n_evaluations
        counters['gevals'] += result.n_gradients
        record = _record(iteration, result.energy, e0, state, ranked, batch, steps, charge, counters, result, ground)
        records.append(record)
        logger.debug(f"iteration {iteration}: +{record.selected} E={record.energy:.12f} "
                     f"err={record.energy_density_error:.3e} max|G|={record.max_pool_gradient:.3e} "
                     f"depth={record.cnot_depth}")

        if config.cnot_budget is not None and record.cnot_depth > config.cnot_budget:
            termination = 'cnot_budget'
            break
        if config.feval_budget is not None and record.function_evaluations > config.feval_budget:
            termination = 'feval_budget'
            break

    extras: Dict[str, Any] = {}
    if config.track_fidelity:
        mf = mean_field(hamiltonian, config.L)
        extras = {
            'mean_field_energy': mf.energy,
            'mean_field_infidelity': 1.0 - fidelity(mf.state, ground),
            'final_vs_mean_field_infidelity': 1.0 - fidelity(state, mf.state),
        }

    logger.info(f"ADAPT {config.pool_id} L={config.L}: {termination} after {iteration} iterations, "
                f"{len(steps)} operators, error={records[-1].energy_density_error:.3e}")
    return Trajectory(config=config, e0=e0, reference_energy=reference_energy, records=records, steps=steps,
                      termination=termination, extras=extras, final_state=Statevector(state, normalize=True))


def replay(trajectory: Trajectory, model: Optional[ModelParams] = None,
           pool: Optional[OperatorPool] = None) -> Statevector:
    """
    Rebuild the final state from the recorded operators and angles.

    Raises:
        ReplayError: If the model or pool disagrees with the trajectory, or
            the rebuilt energy misses the recorded one
    """
    config = trajectory.config
    params = config.params
    if model is not None and model != params:
        raise ReplayError(f"model {model} does not match the trajectory's {params}")
    if pool is not None and (pool.pool_id != config.pool_id or pool.L != config.L):
        raise ReplayError(f"pool {pool.pool_id} L={pool.L} does not match run {config.pool_id} L={config.L}")

    ops = []
    for step in trajectory.steps:
        if pool is not None:
            candidate = pool.get(step.operator.label)
            if candidate is None or not candidate.op.isclose(step.operator.op):
                raise ReplayError(f"operator {step.operator.label} differs from the supplied pool")
        ops.append(step.operator.op)

    hamiltonian = build_hamiltonian(params)
    handle = ObjectiveHandle(hamiltonian, initial_state(config, hamiltonian), ops, config.exponential_mode)
    theta = np.array(trajectory.thetas)
    energy = handle.evaluate(theta)
    if abs(energy - trajectory.final_energy) > REPLAY_TOLERANCE:
        raise ReplayError(f"replayed energy {energy:.14f} differs from recorded {trajectory.final_energy:.14f}")
    return Statevector(handle.state(theta), normalize=True)
