"""
Acceptance checks behind the ``verify`` command.

Each check returns a CheckResult with the observed value and the expected
bound.  The quick suite finishes in well under a minute; ``full=True`` adds
the larger lattices and the long ADAPT runs.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np

from .adapt import AdaptConfig, run_adapt, replay
from .diagnostics import infidelity, mean_field
from .exceptions import SchwingerAdaptError
from .experiments import budget_cut
from .model import build_hamiltonian, charge_operator, get_preset, reference_state
from .optimizer import ObjectiveHandle
from .pauli import PauliString, PauliSum, PauliTerm, commutator, is_time_reversal_odd
from .pools import POOL_FLAGS, OperatorPool, PoolOptions, Tile, build_pool, exchange_generator
from .resources import cnot_depth, synthesize_exponential
from .statevector import expectation, ground_state, pool_gradient
from .tiling import SeedConfig, select_tiles, synthesize_charge_conserving
from .utils import POOL_IDS

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one acceptance criterion"""

    name: str
    passed: bool
    observed: str
    expected: str

    def line(self) -> str:
        mark = '✓' if self.passed else '✗'
        return f"{mark} {self.name}: observed {self.observed} (expected {self.expected})"


def _hamiltonian(preset: str, L: int) -> PauliSum:
    return build_hamiltonian(get_preset(preset).params(L))


def shift_invariant(op: PauliSum, shift: int = 2) -> bool:
    """Every term moved up by `shift` sites, where it still fits, is present with the same coefficient."""
    n = op.n
    for term in op.terms:
        if max(term.string.support()) + shift >= n:
            continue
        moved = PauliString(n, term.string.x_mask << shift, term.string.z_mask << shift)
        if abs(op.coefficient(moved.label) - term.coeff) > 1e-12:
            return False
    return True


def check_exact_solvers(full: bool) -> CheckResult:
    sizes = range(2, 7) if full else range(2, 5)
    worst_gap, worst_charge = 0.0, 0.0
    for preset in 'ABC':
        for L in sizes:
            h = _hamiltonian(preset, L)
            dense = ground_state(h, method='dense')
            lanczos = ground_state(h, method='lanczos')
            worst_gap = max(worst_gap, abs(dense.energy - lanczos.energy))
            worst_charge = max(worst_charge, abs(expectation(dense.state, charge_operator(L))))
    passed = worst_gap <= 1e-10 and worst_charge <= 1e-10
    return CheckResult('exact solvers', passed, f"|dE|={worst_gap:.1e}, |<Q>|={worst_charge:.1e}", "<= 1e-10")


def check_pool_flags(full: bool) -> CheckResult:
    L = 3
    tiles = select_tiles(SeedConfig())
    problems = []
    charge = charge_operator(L)
    for pool_id in POOL_IDS:
        if pool_id == 'pauli_full':
            continue
        pool = build_pool(pool_id, L, tiles=tiles)
        coordinate, conserving, z_string = POOL_FLAGS[pool_id]
        commutes = [not commutator(p.op, charge) for p in pool]
        if conserving and not all(commutes):
            problems.append(f"{pool_id}: operator breaks charge")
        if not conserving and all(commutes):
            problems.append(f"{pool_id}: every operator conserves charge")
        if z_string is not None:
            for p in pool:
                weights = {t.string.weight for t in p.op.terms}
                expected = {p.distance + 1} if z_string else {2}
                if weights != expected:
                    problems.append(f"{pool_id}: {p.label} has weights {sorted(weights)}")
                    break
        if coordinate:
            for p in pool:
                if p.kind == 'volume' and not shift_invariant(p.op):
                    problems.append(f"{pool_id}: {p.label} not shift invariant")
                    break
        if not all(is_time_reversal_odd(p.op) for p in pool):
            problems.append(f"{pool_id}: time-reversal-even operator")
    return CheckResult('pool symmetry flags', not problems, '; '.join(problems) or 'all consistent',
                       'flags match pool ids')


def check_zero_gradient(full: bool) -> CheckResult:
    L, samples = 3, (1000 if full else 100)
    h = _hamiltonian('C', L)
    even_ops = [exchange_generator(i, d, True, L) for d in range(1, 2 * L) for i in range(2 * L - d)]
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(samples):
        psi = rng.standard_normal(1 << (2 * L))
        psi /= np.linalg.norm(psi)
        worst = max(worst, max(abs(pool_gradient(psi, op, h)) for op in even_ops))
    return CheckResult('zero gradient of T-even operators', worst <= 1e-14, f"max|G|={worst:.1e}", "<= 1e-14")


def check_parameter_gradient(full: bool) -> CheckResult:
    L = 3
    h = _hamiltonian('A', L)
    pool = build_pool('xxZ', L, PoolOptions(distances='all'))
    rng = np.random.default_rng(11)
    picks = rng.choice(len(pool), size=10, replace=False)
    handle = ObjectiveHandle(h, reference_state(L), [pool.operators[i].op for i in picks])
    theta = rng.uniform(-np.pi, np.pi, size=10)
    analytic = handle.gradient(theta)
    step = 1e-5
    worst = 0.0
    for j in range(10):
        e = np.zeros(10)
        e[j] = step
        fd = (handle.evaluate(theta + e) - handle.evaluate(theta - e)) / (2 * step)
        worst = max(worst, abs(fd - analytic[j]) / max(abs(analytic[j]), 1e-1))
    return CheckResult('analytic parameter gradient', worst <= 1e-6, f"relative error {worst:.1e}", "<= 1e-6")


def check_convergence(full: bool) -> CheckResult:
    worst = 0.0
    for pool_id in ('xQZ', 'xxZ'):
        for preset in 'AC':
            traj = run_adapt(AdaptConfig(pool_id=pool_id, L=3, preset=preset, max_iterations=60))
            worst = max(worst, min(traj.metric('energy_density_error')))
    return CheckResult('Z-pool convergence at L=3', worst <= 1e-5, f"error {worst:.2e}", "<= 1e-5")


def check_charge_dynamics(full: bool) -> CheckResult:
    traj = run_adapt(AdaptConfig(pool_id='xQZ', L=3, preset='C'))
    conserved = max(abs(q) for q in traj.metric('charge_mean'))
    observed = f"conserving max|<Q>|={conserved:.1e}"
    passed = conserved <= 1e-10
    if full:
        relaxed = run_adapt(AdaptConfig(pool_id='xxZ', L=5, preset='C'))
        charges = np.abs(relaxed.metric('charge_mean'))
        early = charges[:max(2, len(charges) // 3)].max()
        passed = passed and early > 1e-3 and charges[-1] <= 1e-3
        observed += f", relaxed early max {early:.1e}, final {charges[-1]:.1e}"
    return CheckResult('charge dynamics', passed, observed, "conserving <= 1e-10; relaxed rises then returns")


def check_mean_field(full: bool) -> CheckResult:
    L = 3
    worst = 0.0
    for preset in 'ABC':
        h = _hamiltonian(preset, L)
        worst = max(worst, infidelity(mean_field(h, L).state, ground_state(h).state))
    traj = run_adapt(AdaptConfig(pool_id='xQZ', L=L, preset='A', reference='mean_field'))
    steps = len(traj.steps)
    return CheckResult('mean-field reference', worst < 1e-4 and steps == 0,
                       f"infidelity {worst:.1e}, Z-pool steps from mean field {steps}", "< 1e-4 and 0 steps")


def check_time_reversal(full: bool) -> CheckResult:
    sizes = (3, 4, 5) if full else (3,)
    worst_final, worst_even, worst_control = 0.0, 0, 0.0
    for L in sizes:
        broken = run_adapt(AdaptConfig(pool_id='xQZ', L=L, preset='A', reference='trs_breaking_psi1',
                                       options=PoolOptions(t_relax=True)))
        worst_final = max(worst_final, broken.records[-1].delta_t)
        worst_even = max(worst_even, sum(1 for r in broken.records if r.t_even_selected))
        control = run_adapt(AdaptConfig(pool_id='xQZ', L=L, preset='A', reference='trs_preserving_psi2'))
        worst_control = max(worst_control, max(control.metric('delta_t')))
    passed = worst_final < 1e-3 and worst_even <= 3 and worst_control <= 1e-12
    return CheckResult('time-reversal restoration', passed,
                       f"final dT {worst_final:.1e}, T-even iterations {worst_even}, control dT {worst_control:.1e}",
                       "< 1e-3, <= 3, <= 1e-12")


def check_resources(full: bool) -> CheckResult:
    problems = []
    for w in range(1, 7):
        circuit = synthesize_exponential(PauliSum(6, [PauliTerm(1.0, PauliString(6, (1 << w) - 1, 0))]), 0.3)
        if circuit.cnot_count != 2 * (w - 1) or cnot_depth(circuit) != 2 * (w - 1):
            problems.append(f"weight {w}: {circuit.cnot_count} CNOTs, depth {cnot_depth(circuit)}")
    observed = '; '.join(problems) or 'ladder counts exact'
    if full:
        depths = {}
        for pool_id in ('xQx', 'xQZ', 'LQZ'):
            traj = run_adapt(AdaptConfig(pool_id=pool_id, L=5, preset='C'))
            hits = [r.cnot_depth for r in traj.records if r.energy_density_error <= 1e-3]
            depths[pool_id] = hits[0] if hits else None
        if None in depths.values() or not depths['xQx'] < depths['xQZ'] < depths['LQZ']:
            problems.append(f"depth ordering {depths}")
        observed += f"; depths at 1e-3: {depths}"
    return CheckResult('resource counts', not problems, observed, "2(w-1) CNOTs; xQx < xQZ < LQZ")


def check_budget_cuts(full: bool) -> CheckResult:
    from .adapt import IterationRecord, Trajectory

    depths = [0, 300, 800, 1000, 1400]
    fevals = [0, 40, 90, 120, 200]
    records = [IterationRecord(iteration=i, energy=-float(i), energy_density_error=1.0 / (i + 1),
                               max_pool_gradient=1.0, cnot_depth=d, function_evaluations=f)
               for i, (d, f) in enumerate(zip(depths, fevals))]
    traj = Trajectory(config=AdaptConfig(), e0=-10.0, reference_energy=0.0, records=records)
    cnot_cut = budget_cut(traj, 'cnot_depth', 1000).iteration
    feval_cut = budget_cut(traj, 'function_evaluations', 100).iteration
    return CheckResult('budget cuts', cnot_cut == 3 and feval_cut == 2,
                       f"cnot cut at {cnot_cut}, feval cut at {feval_cut}", "3 and 2")


def check_tiling(full: bool) -> CheckResult:
    problems = []
    tiles = select_tiles(SeedConfig())
    if not all(t.width == 4 and t.string.y_count % 2 == 1 for t in tiles):
        problems.append("tile with even Y count or wrong width")
    charge = charge_operator(3)
    if any(commutator(p.op, charge) for p in synthesize_charge_conserving(tiles, 3)):
        problems.append("tile_Q operator breaks charge")
    quartet = [Tile(PauliString.from_label(label)) for label in ('ZIXY', 'IZXY', 'ZIYX', 'IZYX')]
    target = PauliSum.from_terms([(0.25, 'ZIXY'), (-0.25, 'IZXY'), (-0.25, 'ZIYX'), (0.25, 'IZYX')])
    basis = [p.op for p in synthesize_charge_conserving(quartet, 2)]
    labels = ['ZIXY', 'IZXY', 'ZIYX', 'IZYX']
    matrix = np.array([[op.coefficient(label).real for label in labels] for op in basis]).T
    vector = np.array([target.coefficient(label).real for label in labels])
    residual = np.linalg.norm(matrix @ np.linalg.lstsq(matrix, vector, rcond=None)[0] - vector)
    if residual > 1e-10:
        problems.append(f"quartet combination outside the span (residual {residual:.1e})")
    observed = '; '.join(problems) or f"{len(tiles)} tiles, quartet residual {residual:.1e}"
    if full:
        for pool_id in ('tile_pauli', 'tile_Q', 'tile_L'):
            traj = run_adapt(AdaptConfig(pool_id=pool_id, L=4, preset='C'))
            error = min(traj.metric('energy_density_error'))
            if error > 1e-3:
                problems.append(f"{pool_id} error {error:.1e}")
        observed = '; '.join(problems) or observed
    return CheckResult('tiling pipeline', not problems, observed, "odd-Y tiles, charge-conserving tile_Q")


def check_reproducibility(full: bool) -> CheckResult:
    config = AdaptConfig(pool_id='xQZ', L=2, preset='A')
    first, second = run_adapt(config), run_adapt(config)
    same = json.dumps(first.to_dict()['metrics']) == json.dumps(second.to_dict()['metrics'])
    replayed = replay(first)
    gap = abs(expectation(replayed, _hamiltonian('A', 2)) - first.final_energy)
    return CheckResult('reproducibility', same and gap <= 1e-10,
                       f"identical metrics {same}, replay gap {gap:.1e}", "identical, <= 1e-10")


CHECKS: List[Callable[[bool], CheckResult]] = [
    check_exact_solvers,
    check_pool_flags,
    check_zero_gradient,
    check_parameter_gradient,
    check_charge_dynamics,
    check_mean_field,
    check_time_reversal,
    check_resources,
    check_budget_cuts,
    check_tiling,
    check_reproducibility,
]

FULL_ONLY_CHECKS: List[Callable[[bool], CheckResult]] = [check_convergence]


def verify(full: bool = False, pool_file: Optional[Union[str, Path]] = None) -> List[CheckResult]:
    """
    Run the acceptance checks and log one line per criterion.

    A check that raises is reported as failed with the error as the
    observation.  A pool file, when given, must load cleanly.
    """
    checks = CHECKS + (FULL_ONLY_CHECKS if full else [])
    results = []
    if pool_file is not None:
        try:
            pool = OperatorPool.load(pool_file)
            results.append(CheckResult('pool file', True, f"{pool.pool_id} with {len(pool)} operators", 'loads'))
        except SchwingerAdaptError as e:
            results.append(CheckResult('pool file', False, f"{type(e).__name__}: {e}", 'loads'))
    for check in checks:
        try:
            result = check(full)
        except SchwingerAdaptError as e:
            result = CheckResult(check.__name__.replace('check_', '').replace('_', ' '), False,
                                 f"{type(e).__name__}: {e}", 'no error')
        results.append(result)
        (logger.info if result.passed else logger.error)(result.line())
    return results
