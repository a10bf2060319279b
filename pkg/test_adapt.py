#!/usr/bin/env python3
"""
Tests for the adaptive loop, trajectories and replay

Set SCHWINGER_RUN_SLOW=1 to include the larger lattice runs.
"""

import json
import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from schwinger_adapt.adapt import (AdaptConfig, Trajectory, rank_scored, replay, run_adapt, screen_gradients,
                                   tetris_select)
from schwinger_adapt.exceptions import ReplayError, SerializationError
from schwinger_adapt.model import build_hamiltonian, get_preset, reference_state
from schwinger_adapt.pauli import PauliSum
from schwinger_adapt.pools import PoolOperator, PoolOptions, build_pool
from schwinger_adapt.statevector import expectation, fidelity, pool_gradient

RUN_SLOW = os.environ.get('SCHWINGER_RUN_SLOW') == '1'


def exchange(label_xy: str, label_yx: str) -> PauliSum:
    return PauliSum.from_terms([(0.5, label_xy), (-0.5, label_yx)])


def operator(label: str, xy: str, yx: str) -> PoolOperator:
    return PoolOperator(label=label, op=exchange(xy, yx))


class AdaptConfigTest(unittest.TestCase):
    """Test run settings"""

    def test_defaults(self):
        """Test the default run is xQZ at L=2 with TETRIS"""
        config = AdaptConfig()
        self.assertEqual((config.pool_id, config.L, config.preset), ('xQZ', 2, 'C'))
        self.assertTrue(config.tetris)
        self.assertEqual(config.params, get_preset('C').params(2, 1.0))

    def test_invalid_values(self):
        """Test out-of-range settings raise ValueError"""
        for kwargs in ({'epsilon': 0.0}, {'L': 0}, {'pool_id': 'XYZ'}, {'reference': 'vacuum'},
                       {'max_iterations': -1}, {'workers': 0}, {'exponential_mode': 'euler'}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ValueError):
                    AdaptConfig(**kwargs)

    def test_options_from_dict(self):
        """Test a dict of pool options is converted"""
        config = AdaptConfig(pool_id='LQx', L=3, options={'z_surface_swap': True})
        self.assertIsInstance(config.options, PoolOptions)
        self.assertTrue(config.options.z_surface_swap)

    def test_dict_round_trip(self):
        """Test to_dict output rebuilds an equal config"""
        config = AdaptConfig(pool_id='LQZ', L=3, preset='b', cnot_budget=500, tie_break_seed=7,
                             options=PoolOptions(distances='all'))
        self.assertEqual(AdaptConfig.from_dict(config.to_dict()), config)
        self.assertEqual(config.preset, 'B')

    def test_unknown_field(self):
        """Test unknown settings are rejected"""
        with self.assertRaises(ValueError):
            AdaptConfig.from_dict({'pool_id': 'xQZ', 'learning_rate': 0.1})


class SelectionTest(unittest.TestCase):
    """Test ranking and TETRIS batch selection"""

    def setUp(self):
        self.a = operator('a', 'XYII', 'YXII')
        self.b = operator('b', 'IXYI', 'IYXI')
        self.c = operator('c', 'IIXY', 'IIYX')

    def test_rank_by_magnitude(self):
        """Test operators are ordered by |G| descending"""
        ranked = rank_scored([(self.a, 0.1), (self.b, -0.5), (self.c, 0.3)])
        self.assertEqual([p.label for p, _ in ranked], ['b', 'c', 'a'])

    def test_tie_broken_by_serialization(self):
        """Test equal magnitudes are ordered by operator text"""
        ranked = rank_scored([(self.c, 0.2), (self.a, -0.2)])
        expected = sorted([self.a, self.c], key=lambda p: p.serialization)
        self.assertEqual([p.label for p, _ in ranked], [p.label for p in expected])

    def test_seeded_tie_break(self):
        """Test a seeded tie break is reproducible and keeps the magnitude order"""
        scored = [(self.a, 0.2), (self.b, 0.2), (self.c, 0.9)]
        first = rank_scored(scored, np.random.default_rng(3))
        second = rank_scored(scored, np.random.default_rng(3))
        self.assertEqual([p.label for p, _ in first], [p.label for p, _ in second])
        self.assertEqual(first[0][0].label, 'c')

    def test_tetris_disjoint_batch(self):
        """Test overlapping supports are skipped"""
        ranked = rank_scored([(self.a, 0.5), (self.b, 0.4), (self.c, 0.3)])
        batch = tetris_select(ranked, epsilon=0.01)
        self.assertEqual([p.label for p, _ in batch], ['a', 'c'])

    def test_without_tetris(self):
        """Test a single operator is taken without TETRIS"""
        ranked = rank_scored([(self.a, 0.5), (self.c, 0.3)])
        self.assertEqual([p.label for p, _ in tetris_select(ranked, 0.01, tetris=False)], ['a'])

    def test_epsilon_threshold(self):
        """Test operators below epsilon are never taken"""
        ranked = rank_scored([(self.a, 0.5), (self.c, 0.005)])
        self.assertEqual([p.label for p, _ in tetris_select(ranked, 0.01)], ['a'])
        self.assertEqual(tetris_select(rank_scored([(self.a, 1e-4)]), 0.01), [])

    def test_screen_matches_pool_gradient(self):
        """Test screening agrees with direct gradients in pool order"""
        hamiltonian = build_hamiltonian(get_preset('A').params(2))
        pool = build_pool('xQZ', 2)
        state = reference_state(2)
        serial = screen_gradients(state, pool, hamiltonian)
        threaded = screen_gradients(state, pool, hamiltonian, workers=3)
        self.assertEqual([p.label for p, _ in serial], pool.labels())
        for (p, g), (_, g_threaded) in zip(serial, threaded):
            self.assertAlmostEqual(g, pool_gradient(state, p.op, hamiltonian), places=12)
            self.assertEqual(g, g_threaded)


class RunAdaptTest(unittest.TestCase):
    """Test the adaptive loop on two physical sites"""

    @classmethod
    def setUpClass(cls):
        cls.config = AdaptConfig(pool_id='xQZ', L=2, preset='A')
        cls.trajectory = run_adapt(cls.config)

    def test_converges(self):
        """Test the run converges close to the exact ground energy"""
        traj = self.trajectory
        self.assertEqual(traj.termination, 'converged')
        self.assertLessEqual(traj.records[-1].energy_density_error, 1e-3)
        self.assertLess(traj.records[-1].max_pool_gradient, self.config.epsilon)

    def test_reference_is_iteration_zero(self):
        """Test the first record describes the staggered vacuum"""
        first = self.trajectory.records[0]
        self.assertEqual(first.iteration, 0)
        self.assertEqual(first.selected, [])
        self.assertEqual(first.cnot_depth, 0)
        self.assertAlmostEqual(first.energy, -2 * get_preset('A').m0, places=12)
        self.assertAlmostEqual(self.trajectory.reference_energy, first.energy)

    def test_energies_non_increasing(self):
        """Test each iteration is no worse than the one before"""
        energies = self.trajectory.metric('energy')
        for before, after in zip(energies, energies[1:]):
            self.assertLessEqual(after, before + 1e-12)
        self.assertGreaterEqual(energies[-1], self.trajectory.e0 - 1e-12)

    def test_charge_and_time_reversal_preserved(self):
        """Test the charge-conserving real pool keeps Q = 0 and a real state"""
        for record in self.trajectory.records:
            self.assertAlmostEqual(record.charge_mean, 0.0, places=10)
            self.assertAlmostEqual(record.charge_variance, 0.0, places=10)
            self.assertLess(record.delta_t, 1e-8)

    def test_split_halves_leak_charge(self):
        """Test the split-half local pool moves the state out of the Q = 0 sector"""
        trajectory = run_adapt(AdaptConfig(pool_id='xxZ', L=3, preset='C', max_iterations=4))
        variances = trajectory.metric('charge_variance')
        self.assertAlmostEqual(variances[0], 0.0, places=12)
        self.assertGreater(max(variances), 1e-6)

    def test_batches_are_disjoint(self):
        """Test operators added in one iteration act on disjoint qubits"""
        by_iteration = {}
        for step in self.trajectory.steps:
            by_iteration.setdefault(step.iteration, []).append(step.operator.support)
        for supports in by_iteration.values():
            used = set()
            for support in supports:
                self.assertFalse(used & support)
                used |= support

    def test_counters_accumulate(self):
        """Test evaluation counters and parameter counts grow with the ansatz"""
        fevals = self.trajectory.metric('function_evaluations')
        self.assertEqual(fevals[0], 0)
        self.assertEqual(fevals, sorted(fevals))
        self.assertEqual(self.trajectory.records[-1].n_parameters, len(self.trajectory.steps))

    def test_unknown_metric(self):
        """Test asking for an unknown metric raises KeyError"""
        with self.assertRaises(KeyError):
            self.trajectory.metric('entropy')

    def test_deterministic(self):
        """Test an identical config reproduces the same metrics and operators"""
        again = run_adapt(self.config)
        self.assertEqual(json.dumps(again.to_dict()['metrics']), json.dumps(self.trajectory.to_dict()['metrics']))
        self.assertEqual([s.operator.label for s in again.steps], [s.operator.label for s in self.trajectory.steps])

    def test_replay(self):
        """Test replay rebuilds the final state"""
        state = replay(self.trajectory)
        hamiltonian = build_hamiltonian(self.config.params)
        self.assertAlmostEqual(expectation(state, hamiltonian), self.trajectory.final_energy, places=10)
        self.assertAlmostEqual(fidelity(state, self.trajectory.final_state), 1.0, places=10)

    def test_replay_with_matching_pool(self):
        """Test replay accepts the pool the run was built from"""
        replay(self.trajectory, model=self.config.params, pool=build_pool('xQZ', 2))

    def test_replay_mismatches(self):
        """Test replay rejects a different model, pool or angle list"""
        with self.assertRaises(ReplayError):
            replay(self.trajectory, model=get_preset('C').params(2))
        with self.assertRaises(ReplayError):
            replay(self.trajectory, pool=build_pool('xQx', 2))
        tampered = Trajectory.from_dict(self.trajectory.to_dict())
        tampered.steps[0].theta += 0.1
        with self.assertRaises(ReplayError):
            replay(tampered)


class TerminationTest(unittest.TestCase):
    """Test budget and iteration limits"""

    def test_max_iterations_zero(self):
        """Test a zero iteration cap records only the reference"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', max_iterations=0))
        self.assertEqual(traj.termination, 'max_iterations')
        self.assertEqual(len(traj.records), 1)
        self.assertEqual(traj.steps, [])

    def test_cnot_budget(self):
        """Test exceeding the CNOT depth budget stops after recording"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', cnot_budget=1))
        self.assertEqual(traj.termination, 'cnot_budget')
        self.assertEqual(len(traj.records), 2)
        self.assertGreater(traj.records[-1].cnot_depth, 1)

    def test_feval_budget(self):
        """Test exceeding the evaluation budget stops after recording"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', feval_budget=1))
        self.assertEqual(traj.termination, 'feval_budget')
        self.assertGreater(traj.records[-1].function_evaluations, 1)

    def test_single_operator_per_iteration(self):
        """Test disabling TETRIS adds one operator per iteration"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', tetris=False))
        for record in traj.records[1:]:
            self.assertEqual(len(record.selected), 1)
        self.assertEqual(len(traj.steps), len(traj.records) - 1)

    def test_mean_field_reference(self):
        """Test the exchange pool has nothing to add to the mean-field state"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', reference='mean_field'))
        self.assertEqual(traj.termination, 'converged')
        self.assertEqual(traj.steps, [])

    def test_pool_size_mismatch(self):
        """Test a prebuilt pool for another lattice is rejected"""
        with self.assertRaises(ValueError):
            run_adapt(AdaptConfig(pool_id='xQZ', L=2), pool=build_pool('xQZ', 3))

    def test_fidelity_tracking(self):
        """Test tracked infidelities and mean-field extras are recorded"""
        traj = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='A', track_fidelity=True))
        self.assertTrue(all(r.infidelity is not None for r in traj.records))
        self.assertLess(traj.records[-1].infidelity, traj.records[0].infidelity)
        for key in ('mean_field_energy', 'mean_field_infidelity', 'final_vs_mean_field_infidelity'):
            self.assertIn(key, traj.extras)


class TrajectoryFileTest(unittest.TestCase):
    """Test trajectory files"""

    @classmethod
    def setUpClass(cls):
        cls.trajectory = run_adapt(AdaptConfig(pool_id='xQZ', L=2, preset='B', tie_break_seed=5))

    def test_save_and_load(self):
        """Test a saved trajectory loads with the same steps and metrics"""
        with tempfile.TemporaryDirectory() as tmp:
            path = self.trajectory.save(Path(tmp) / 'nested' / 'run.json')
            loaded = Trajectory.load(path)
        self.assertEqual(loaded.config, self.trajectory.config)
        self.assertEqual(loaded.termination, self.trajectory.termination)
        self.assertEqual(loaded.records, self.trajectory.records)
        self.assertEqual([s.operator.label for s in loaded.steps], [s.operator.label for s in self.trajectory.steps])
        self.assertEqual(loaded.thetas, self.trajectory.thetas)
        replay(loaded)

    def test_seeds_recorded(self):
        """Test every seed is written"""
        seeds = self.trajectory.to_dict()['seeds']
        self.assertEqual(seeds['tie_break_seed'], 5)
        self.assertIn('lanczos_seed', seeds)

    def test_malformed_documents(self):
        """Test broken files raise SerializationError"""
        data = self.trajectory.to_dict()
        for broken in ({k: v for k, v in data.items() if k != 'metrics'},
                       dict(data, termination='tired'),
                       dict(data, config={'pool_id': 'nope'})):
            with self.assertRaises(SerializationError):
                Trajectory.from_dict(broken)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'bad.json'
            path.write_text('{"format": 1,')
            with self.assertRaises(SerializationError):
                Trajectory.load(path)
            with self.assertRaises(SerializationError):
                Trajectory.load(Path(tmp) / 'missing.json')


@unittest.skipUnless(RUN_SLOW, "set SCHWINGER_RUN_SLOW=1 to run")
class LargerLatticeTest(unittest.TestCase):
    """Test convergence on larger lattices"""

    def test_layered_pool_converges(self):
        """Test LQZ reaches the accuracy target at L=3"""
        traj = run_adapt(AdaptConfig(pool_id='LQZ', L=3, preset='C'))
        self.assertEqual(traj.termination, 'converged')
        self.assertLessEqual(traj.records[-1].energy_density_error, 1e-3)

    def test_trotter_mode_replays(self):
        """Test product-formula exponentials replay consistently"""
        traj = run_adapt(AdaptConfig(pool_id='LQx', L=3, preset='A', exponential_mode='trotter'))
        replay(traj)


if __name__ == '__main__':
    unittest.main()
